#pragma once

// Invariant suites run by `magtrap verify <suite>`. Each check samples the
// built-in scenarios at seeded random points and compares a measured value
// with a tolerance.

#include <functional>
#include <ostream>

#include "magtrap/app/run.hpp"

namespace magtrap::app {

struct Check {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

class Report {
 public:
  void add(const std::string& suite, const std::string& name, double value, double tolerance,
           std::string detail = {}) {
    checks_.push_back({suite, name, value, tolerance, value <= tolerance, std::move(detail)});
  }
  void fail(const std::string& suite, const std::string& name, const std::string& why) {
    checks_.push_back({suite, name, std::numeric_limits<double>::infinity(), 0.0, false, why});
  }

  const std::vector<Check>& checks() const { return checks_; }
  bool ok() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.passed; });
  }

  void print(std::ostream& os) const {
    for (const auto& c : checks_) {
      os << (c.passed ? "PASS " : "FAIL ") << c.suite << ": " << c.name << "  (" << c.value
         << " <= " << c.tolerance << ")";
      if (!c.detail.empty()) os << "  " << c.detail;
      os << "\n";
    }
    const auto failed = std::count_if(checks_.begin(), checks_.end(), [](const Check& c) { return !c.passed; });
    os << checks_.size() - failed << "/" << checks_.size() << " checks passed\n";
  }

 private:
  std::vector<Check> checks_;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"geometry", "forms", "fields", "dynamics", "scenarios", "all"};
  return names;
}

// Built-in field configurations exercised by the suites.
inline std::vector<std::pair<std::string, ScenarioSpec>> builtin_specs() {
  std::vector<std::pair<std::string, ScenarioSpec>> out;
  auto add = [&](const std::string& label, ScenarioSpec s) { out.emplace_back(label, std::move(s)); };
  ScenarioSpec s;
  s.name = "disc";
  add("disc", s);
  s.perturbation = {"polynomial", {0.1, 0, 0}, {0.05, 0, 0}};
  add("disc+polynomial", s);
  s = {};
  s.name = "disc";
  s.profile.kind = "inverse";
  s.profile.coefficient = -1.0;
  add("disc f=-1/n", s);
  s = {};
  s.name = "ball";
  add("ball", s);
  s.perturbation = {"polynomial", {0.1, -0.05, 0.2}, {0.05, 0.1, -0.05}};
  add("ball+polynomial", s);
  s = {};
  s.name = "solid-torus";
  add("solid-torus", s);
  s.perturbation = {"polynomial", {0.1, 0.0, 0.05}, {0.02, 0.03, 0.01}};
  add("solid-torus+polynomial", s);
  s = {};
  s.name = "solid-torus";
  s.sigma_b = 0.5;
  add("solid-torus b=0.5", s);
  s = {};
  s.name = "log-cylinder";
  s.beta = 0.3;
  add("log-cylinder", s);
  s = {};
  s.name = "plane";
  add("plane", s);
  return out;
}

namespace detail {

template <class F>
void for_each_builtin(Report& rep, const std::string& suite, F&& f) {
  for (const auto& [label, spec] : builtin_specs()) {
    try {
      std::visit([&](const auto& scn) { f(label, scn); }, build_scenario(spec));
    } catch (const std::exception& e) {
      rep.fail(suite, label, e.what());
    }
  }
}

// Random point with n ≥ min_n, or anywhere for scenarios without a collar.
template <int D>
Vec<D> sample_point(const Scenario<D>& scn, Rng& rng, double min_n) {
  return random_interior_point(scn, rng, min_n);
}

// Points of the collar with n ≥ min_n, away from the cylinder midline
// where the collar decomposition changes side.
template <int D>
Vec<D> sample_collar_point(const Scenario<D>& scn, Rng& rng, double min_n) {
  const double eps = scn.collar_width();
  for (;;) {
    const Vec<D> q = random_interior_point(scn, rng, min_n, eps);
    if (eps - scn.system.boundary_distance(q) > 1e-3) return q;
  }
}

// Boundary chart points spread over the whole boundary.
template <int D>
std::vector<Vec<D - 1>> boundary_points(const std::string& name, Rng& rng, int count) {
  std::vector<Vec<D - 1>> out;
  for (int k = 0; k < count; ++k) {
    Vec<D - 1> x;
    for (int i = 0; i < D - 1; ++i) x[i] = rng.uniform(0.0, kTwoPi);
    if (name == "ball") x[0] = std::acos(rng.uniform(-1.0, 1.0));
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void verify_geometry(Report& rep) {
  const std::string suite = "geometry";
  Rng rng(101);
  double worst_sym = 0.0, worst_eig = std::numeric_limits<double>::infinity();
  detail::for_each_builtin(rep, suite, [&](const std::string&, const auto& scn) {
    constexpr int D = std::decay_t<decltype(scn)>::Dim;
    for (int i = 0; i < 100; ++i) {
      const Vec<D> q = detail::sample_point(scn, rng, 1e-3);
      const Mat<D> g = metric_at(scn.system.chart, scn.system.metric, q);
      worst_sym = std::max(worst_sym, (g - g.transpose()).cwiseAbs().maxCoeff());
      worst_eig = std::min(worst_eig, Eigen::SelfAdjointEigenSolver<Mat<D>>(g).eigenvalues().minCoeff());
    }
  });
  rep.add(suite, "metric symmetric at 100 points per scenario", worst_sym, 1e-14);
  rep.add(suite, "metric positive definite (negated least eigenvalue)", -worst_eig, 0.0);

  // Analytic Christoffel symbols against central differences of the metric.
  auto christoffel_gap = [&](const auto& chart, const auto& metric, auto draw) {
    constexpr int D = std::decay_t<decltype(chart)>::Dim;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Vec<D> q = draw();
      const auto a = christoffels_at(chart, metric, q);
      const auto f = christoffels_fd<D>(metric, q, Vec<D>(Vec<D>::Constant(1e-5)));
      for (int k = 0; k < D; ++k) worst = std::max(worst, (a[k] - f[k]).cwiseAbs().maxCoeff());
    }
    return worst;
  };
  const TorusShape torus{2.0, 1.0};
  rep.add(suite, "polar Christoffels match finite differences",
          christoffel_gap(polar_chart(), polar_metric(),
                          [&] { return Vec<2>(rng.uniform(0.2, 2.0), rng.uniform(0.0, kTwoPi)); }),
          1e-7);
  rep.add(suite, "disc collar Christoffels match finite differences",
          christoffel_gap(disc_collar_chart(1.0), disc_collar_metric(1.0),
                          [&] { return Vec<2>(rng.uniform(0.01, 0.9), rng.uniform(0.0, kTwoPi)); }),
          1e-7);
  rep.add(suite, "torus collar Christoffels match finite differences",
          christoffel_gap(torus_collar_chart(torus), torus_collar_metric(torus),
                          [&] {
                            return Vec<3>(rng.uniform(0.01, 0.9), rng.uniform(0.0, kTwoPi),
                                          rng.uniform(0.0, kTwoPi));
                          }),
          1e-7);
  rep.add(suite, "ball collar Christoffels match finite differences",
          christoffel_gap(ball_collar_chart(1.0), ball_collar_metric(1.0),
                          [&] {
                            return Vec<3>(rng.uniform(0.01, 0.9), rng.uniform(0.3, 2.8), rng.uniform(0.0, kTwoPi));
                          }),
          1e-7);

  // Collar metrics are pullbacks of the Euclidean metric through the embedding.
  double worst_pull = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec<3> q(rng.uniform(0.01, 0.9), rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi));
    Mat<3> jac;
    for (int k = 0; k < 3; ++k) {
      const Vec<3> e = unit<3>(k) * 1e-6;
      jac.col(k) = (torus.embed(q + e) - torus.embed(q - e)) / 2e-6;
    }
    worst_pull = std::max(worst_pull, (jac.transpose() * jac - torus.metric(q)).cwiseAbs().maxCoeff());
  }
  rep.add(suite, "torus collar metric equals JᵀJ of the embedding", worst_pull, 1e-7);
}

inline void verify_forms(Report& rep) {
  const std::string suite = "forms";
  Rng rng(202);
  double anti = 0.0, premise = 0.0;
  detail::for_each_builtin(rep, suite, [&](const std::string&, const auto& scn) {
    constexpr int D = std::decay_t<decltype(scn)>::Dim;
    for (int i = 0; i < 100; ++i) {
      const Vec<D> q = detail::sample_point(scn, rng, 1e-3);
      const Mat<D> g = metric_at(scn.system.chart, scn.system.metric, q);
      const Mat<D> gy = g * lorentz_map(scn.system.chart, scn.system.metric, scn.system.field, q);
      const double scale = 1.0 + gy.cwiseAbs().maxCoeff();
      anti = std::max(anti, (gy + gy.transpose()).cwiseAbs().maxCoeff() / scale);
      const Vec<D> u = rng.direction<D>();
      premise = std::max(premise, std::abs(u.dot(gy * u)) / scale);
    }
  });
  rep.add(suite, "g-antisymmetry of Y, relative to max|gY|", anti, 1e-10);
  rep.add(suite, "B(u, u) = 0 for random u, relative to max|gY|", premise, 1e-12);

  double enc = 0.0;
  const auto chart = Chart<3>{};
  const auto metric = euclidean_metric<3>();
  const TwoForm<3> field = encode_vector_field_3d<3>([](const Vec<3>& q) {
    return Vec<3>(std::sin(q[1]), q[0] * q[2], 1.0 + q[0]);
  });
  for (int i = 0; i < 100; ++i) {
    const Vec<3> q = rng.direction<3>();
    const Vec<3> v = rng.direction<3>();
    const Vec<3> bvec(std::sin(q[1]), q[0] * q[2], 1.0 + q[0]);
    enc = std::max(enc, (lorentz_map(chart, metric, field, q) * v - v.cross(bvec)).cwiseAbs().maxCoeff());
    enc = std::max(enc, (decode_vector(encode_vector(bvec)) - bvec).cwiseAbs().maxCoeff());
  }
  rep.add(suite, "encoded vector field acts as v × B", enc, 1e-12);

  // d of ω = (x²y, −x z, y z²) against its exact derivative.
  const OneForm<3> w{[](const Vec<3>& q) { return Vec<3>(q[0] * q[0] * q[1], -q[0] * q[2], q[1] * q[2] * q[2]); }, {}};
  double dw = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec<3> q = rng.direction<3>();
    TwoFormValue<3> exact;
    exact.set(0, 1, -q[2] - q[0] * q[0]);
    exact.set(0, 2, 0.0);
    exact.set(1, 2, q[2] * q[2] + q[0]);
    dw = std::max(dw, exterior_derivative_residual(w, exact, chart, q, 1e-3));
  }
  rep.add(suite, "exterior derivative of a polynomial 1-form", dw, 1e-8);

  // A non-closed 2-form must be flagged.
  const TwoForm<3> open{[](const Vec<3>& q) {
    TwoFormValue<3> b;
    b.set(0, 1, q[2]);
    return b;
  }};
  const double r = closedness(open, chart, Vec<3>(0.1, 0.2, 0.3), 1e-3).residual;
  rep.add(suite, "dB of z dx∧dy is detected (|residual − 1|)", std::abs(r - 1.0), 1e-8);
}

inline void verify_fields(Report& rep) {
  const std::string suite = "fields";
  Rng rng(303);
  detail::for_each_builtin(rep, suite, [&](const std::string& label, const auto& scn) {
    constexpr int D = std::decay_t<decltype(scn)>::Dim;
    const auto& sys = scn.system;
    // Closedness with Richardson step halving.
    double closed = 0.0;
    bool consistent = true;
    for (int i = 0; i < 100; ++i) {
      const Vec<D> q = detail::sample_point(scn, rng, 1e-3);
      const auto c = closedness(sys.field, sys.chart, q, check_step(sys.boundary_distance(q)));
      closed = std::max(closed, c.relative);
      consistent = consistent && c.consistent;
    }
    rep.add(suite, label + ": dB = 0 at 100 points (relative)", closed, 1e-6);
    rep.add(suite, label + ": step-halving consistency (failures)", consistent ? 0.0 : 1.0, 0.0);

    // dA = B for the assembled potential.
    if (sys.potential) {
      double worst = 0.0;
      for (int i = 0; i < 100; ++i) {
        const Vec<D> q = scn.field ? detail::sample_collar_point(scn, rng, 1e-3) : detail::sample_point(scn, rng, 0.0);
        const double h = check_step(sys.boundary_distance(q));
        const TwoFormValue<D> b = sys.field(q);
        const double res = exterior_derivative_residual(sys.potential->form, b, sys.chart, q, h);
        worst = std::max(worst, res / (1.0 + b.max_abs()));
      }
      rep.add(suite, label + ": dA = B at 100 points with n >= 1e-3 (relative)", worst, 1e-6);
    }
    if (!scn.field) return;
    const auto& field = *scn.field;

    // Decomposition, perturbation bounds and radial primitive bounds.
    double split = 0.0, value = 0.0, grad = 0.0, prim = 0.0, prim_grad = 0.0;
    double diam = 0.0;
    std::vector<Vec<D>> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(detail::sample_collar_point(scn, rng, 1e-3));
    for (int i = 0; i < 200; ++i) {
      const Vec<D> q = detail::sample_point(scn, rng, 0.0);
      diam = std::max(diam, 2.0 * (q - field.primitive_center).cwiseAbs().maxCoeff());
    }
    for (const auto& q : pts) {
      const double n = field.collar.distance(q);
      const TwoFormValue<D> expect =
          field.profile.profile().f(n) * wedge<D>(field.collar.distance_gradient(q), field.sigma.pullback(q)) +
          field.perturbation(q);
      split = std::max(split, (field.total(q) - expect).max_abs() / (1.0 + expect.max_abs()));
      value = std::max(value, field.perturbation(q).max_abs());
      bool usable = true;
      const double g = sampled_gradient(field.perturbation, field.collar, q, 1e-4, usable);
      if (usable) grad = std::max(grad, g);
      if (!field.perturbation_primitive) {
        const OneForm<D> a{[&](const Vec<D>& x) {
          return radial_primitive<D>(field.perturbation, x, 32, field.primitive_center, field.perturbation_domain);
        }, {}};
        prim = std::max(prim, a(q).cwiseAbs().maxCoeff());
        prim_grad = std::max(prim_grad, one_form_jacobian_fd<D>(a, q, 1e-4).cwiseAbs().maxCoeff());
      }
    }
    rep.add(suite, label + ": total = f dn∧σ + B_per on the collar (relative)", split, 1e-12);
    rep.add(suite, label + ": sampled |B_per| / declared bound", field.bounds.value > 0 ? value / field.bounds.value : value,
            field.bounds.value > 0 ? 1.01 : 0.0);
    rep.add(suite, label + ": sampled |∇B_per| / declared bound",
            field.bounds.gradient > 0 ? grad / field.bounds.gradient : grad, field.bounds.gradient > 0 ? 1.01 : 1e-9);
    if (!field.perturbation_primitive) {
      const double bound_a = diam * field.bounds.value;
      const double bound_da = field.bounds.value + diam * field.bounds.gradient;
      rep.add(suite, label + ": |a_i| of the radial primitive minus diam·sup|B_per|", prim - bound_a, 1e-12);
      rep.add(suite, label + ": |∂a| of the radial primitive minus (sup|B_per| + diam·sup|∇B_per|)",
              prim_grad - bound_da, 1e-6);
    }

    // Force structure of the simple part.
    const MagneticField<D> simple = simple_part(field);
    double force = 0.0;
    int used = 0;
    for (const auto& q : pts) {
      if (!(field.sigma.pullback(q).norm() > 1e-6)) continue;
      const auto fs = force_structure_check(simple, sys.chart, sys.metric, q);
      const double scale = std::max(1.0, std::abs(fs.scale));
      force = std::max({force, fs.normal / scale, fs.sbar / scale, fs.kernel / scale});
      ++used;
    }
    rep.add(suite, label + ": force structure Y∂n = −f|σ|S̄, YS̄ = f|σ|∂n, Y|ker B = 0", force, 1e-8,
            std::to_string(used) + " collar points");
  });
}

inline void verify_dynamics(Report& rep) {
  const std::string suite = "dynamics";
  IntegratorConfig cfg;
  cfg.method = Method::dop853;
  cfg.horizon = 100.0;
  cfg.cadence = 0.5;
  detail::for_each_builtin(rep, suite, [&](const std::string& label, const auto& scn) {
    constexpr int D = std::decay_t<decltype(scn)>::Dim;
    Rng rng(404);
    double drift = 0.0, sdrift = 0.0;
    int runs = 0, escapes = 0;
    for (int k = 0; k < 3; ++k) {
      ParticleState<D> s;
      s.q = random_interior_point(scn, rng, std::min(0.25, 0.5 * scn.collar_width()));
      s.w = std::sqrt(2.0) * random_unit_velocity(scn.system, s.q, rng);
      const auto tr = integrate(scn.system, s, cfg);
      if (tr.failure()) {
        rep.fail(suite, label + ": energy run", tr.failure()->detail);
        return;
      }
      if (tr.escaped()) {
        ++escapes;
        continue;
      }
      ++runs;
      drift = std::max(drift, tr.energy_drift);
      sdrift = std::max(sdrift, tr.speed_drift);
    }
    const std::string note = std::to_string(runs) + " runs, " + std::to_string(escapes) + " escaped";
    rep.add(suite, label + ": relative energy drift over T = 100", drift, 1e-6, note);
    rep.add(suite, label + ": relative speed drift over T = 100", sdrift, 1e-6, note);
  });

  // Lorentz against Hamiltonian from matched initial conditions.
  auto equivalence = [&](const ScenarioSpec& spec, double min_n) {
    const auto scn = build_scenario_as<2>(spec);
    Rng rng(505);
    double worst = 0.0;
    IntegratorConfig c;
    c.horizon = 10.0;
    c.cadence = 0.05;
    for (int k = 0; k < 4; ++k) {
      ParticleState<2> s;
      s.q = random_interior_point(scn, rng, min_n);
      s.w = random_unit_velocity(scn.system, s.q, rng);
      const auto lt = integrate(scn.system, s, c);
      const auto ht = integrate(scn.system, convert(scn.system, s, Formulation::hamiltonian), c);
      const std::size_t m = std::min(lt.samples.size(), ht.samples.size());
      for (std::size_t i = 0; i < m; ++i)
        worst = std::max(worst, (lt.samples[i].q - ht.samples[i].q).cwiseAbs().maxCoeff());
      if (lt.samples.size() != ht.samples.size()) worst = std::numeric_limits<double>::infinity();
    }
    return worst;
  };
  ScenarioSpec disc;
  disc.name = "disc";
  ScenarioSpec plane;
  plane.name = "plane";
  rep.add(suite, "disc: Lorentz vs Hamiltonian positions over T = 10", equivalence(disc, 0.05), 1e-5);
  rep.add(suite, "plane: Lorentz vs Hamiltonian positions over T = 10", equivalence(plane, 0.0), 1e-5);

  // Forward T, then back with negated velocity and charge.
  {
    auto scn = build_scenario_as<2>(disc);
    Rng rng(606);
    IntegratorConfig c;
    c.horizon = 5.0;
    c.record_dense = false;
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      ParticleState<2> s;
      s.q = random_interior_point(scn, rng, 0.1);
      s.w = random_unit_velocity(scn.system, s.q, rng);
      const auto fwd = integrate(scn.system, s, c);
      ParticleState<2> back;
      back.q = fwd.samples.back().q;
      back.w = -fwd.samples.back().v;
      auto reversed = scn.system;
      reversed.particle.charge = -reversed.particle.charge;
      const auto bwd = integrate(reversed, back, c);
      worst = std::max(worst, (bwd.samples.back().q - s.q).cwiseAbs().maxCoeff());
    }
    rep.add(suite, "disc: time reversal returns to q0", worst, 1e-5);
  }

  // Escape localization on the ball axis.
  {
    ScenarioSpec ball;
    ball.name = "ball";
    const auto scn = build_scenario_as<3>(ball);
    ParticleState<3> s;
    s.w = Vec<3>(0.0, 0.0, 1.0);
    IntegratorConfig c;
    c.horizon = 5.0;
    const auto tr = integrate(scn.system, s, c);
    const auto* e = tr.escape();
    if (!e) {
      rep.fail(suite, "ball axis: escape event", "no escape recorded");
    } else {
      rep.add(suite, "ball axis: n at the event minus (n_min + 1e-9)", e->n - (c.escape_threshold + 1e-9), 0.0);
      rep.add(suite, "ball axis: |boundary time − 1|", std::abs(e->boundary_time - 1.0), 1e-6);
      rep.add(suite, "ball axis: zero-locus norm at exit", e->zero_locus_norm, 1e-6);
    }
  }
}

inline void verify_scenarios(Report& rep) {
  const std::string suite = "scenarios";
  Rng rng(707);
  auto sigma_min = [&](const std::string& name, auto tag, const ScenarioSpec& spec) {
    constexpr int D = decltype(tag)::value;
    const auto scn = build_scenario_as<D>(spec);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& x : detail::boundary_points<D>(name, rng, 500)) lo = std::min(lo, scn.field->sigma.norm(x));
    return lo;
  };
  ScenarioSpec spec;
  spec.name = "disc";
  rep.add(suite, "disc: 0.5 − min |σ∞| over the boundary", 0.5 - sigma_min("disc", std::integral_constant<int, 2>{}, spec), 0.0);
  spec.name = "log-cylinder";
  rep.add(suite, "log-cylinder: 0.5 − min |σ∞| over the boundary",
          0.5 - sigma_min("log-cylinder", std::integral_constant<int, 2>{}, spec), 0.0);
  spec.name = "solid-torus";
  const double torus_floor = 1.0 / (spec.major_radius + spec.minor_radius);
  rep.add(suite, "solid-torus: 1/(R + r0) − min |σ∞| over the boundary (analytic floor)",
          torus_floor - sigma_min("solid-torus", std::integral_constant<int, 3>{}, spec), 1e-12);

  {
    spec.name = "ball";
    const auto scn = build_scenario_as<3>(spec);
    const double poles = std::max(scn.field->sigma.norm(Vec<2>(0.0, 0.3)), scn.field->sigma.norm(Vec<2>(std::numbers::pi, 1.0)));
    rep.add(suite, "ball: |σ∞| at the poles", poles, 0.0);
    double off = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 500; ++i) {
      const Vec<2> x(rng.uniform(0.01, std::numbers::pi - 0.01), rng.uniform(0.0, kTwoPi));
      off = std::min(off, scn.field->sigma.norm(x) / std::sin(x[0]));
    }
    rep.add(suite, "ball: |σ∞| = sin ϑ off the poles (1 − min ratio)", std::abs(1.0 - off), 1e-12);
  }
  {
    ScenarioSpec cyl;
    cyl.name = "log-cylinder";
    cyl.beta = 0.3;
    const auto scn = build_scenario_as<2>(cyl);
    const double L = cyl.length;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec<2> q(rng.uniform(1e-3, L - 1e-3), rng.uniform(0.0, kTwoPi));
      // (1/n) dn∧σ at each end, dn = ±du, plus β = c du∧dθ.
      const double expect = 1.0 / q[0] - 1.0 / (L - q[0]) + cyl.beta;
      worst = std::max(worst, std::abs(scn.system.field(q)(0, 1) - expect) / (1.0 + std::abs(expect)));
    }
    rep.add(suite, "log-cylinder: field in log-symplectic normal form", worst, 1e-12);
  }
  {
    spec = {};
    spec.name = "disc";
    const auto scn = build_scenario_as<2>(spec);
    // Cartesian density b_xy at r = 0.9 equals f(0.1) / r in the area form r dr∧dθ.
    const double density = std::abs(scn.system.field(Vec<2>(0.9, 0.0))(0, 1));
    const double expect = (1.0 / 0.01) / 0.9;
    rep.add(suite, "disc: field density at r = 0.9 equals f(0.1)/r", std::abs(density - expect) / expect, 1e-12);
  }
  detail::for_each_builtin(rep, suite, [&](const std::string& label, const auto& scn) {
    const auto v = validate_scenario(scn, 100);
    rep.add(suite, label + ": construction validation closedness", v.closedness, 1e-6);
  });
}

inline Report run_verify(const std::string& suite) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw ConfigError("verify: unknown suite '" + suite + "' (expected geometry, forms, fields, dynamics, scenarios or all)");
  Report rep;
  const bool all = suite == "all";
  if (all || suite == "geometry") verify_geometry(rep);
  if (all || suite == "forms") verify_forms(rep);
  if (all || suite == "fields") verify_fields(rep);
  if (all || suite == "dynamics") verify_dynamics(rep);
  if (all || suite == "scenarios") verify_scenarios(rep);
  return rep;
}

}  // namespace magtrap::app

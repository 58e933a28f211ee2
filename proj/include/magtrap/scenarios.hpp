#pragma once

// Built-in geometry + field configurations: disc, ball, solid torus,
// log-cylinder, and a uniform-field plane used as an analytic fixture.
//
// All scenarios integrate in a single global chart. The disc, ball and torus
// use Cartesian coordinates of the embedding so that trajectories may cross
// the centre or the axis; the profile is continued past the collar with a
// smooth taper so the field vanishes in a core region.

#include <optional>
#include <string>
#include <variant>

#include "magtrap/dynamics.hpp"
#include "magtrap/rng.hpp"

namespace magtrap {

struct ProfileSpec {
  std::string kind;  // empty selects the scenario default
  double coefficient = 1.0;
  double exponent = 2.0;  // power and cutoff kinds
  double cutoff = 0.0;    // cutoff kind
};

// 2d: (c0 + cx x + cy y) dx∧dy with constant[0] = c0, linear = (cx, cy).
// 3d: B⃗ = constant + (α y, β z, γ x) with linear = (α, β, γ), divergence-free.
struct PerturbationSpec {
  std::string kind = "zero";  // zero | constant | polynomial
  std::array<double, 3> constant{};
  std::array<double, 3> linear{};
};

struct ScenarioSpec {
  std::string name = "disc";  // disc | ball | solid-torus | log-cylinder | plane
  std::string chart = "cartesian";  // disc also accepts polar
  double radius = 1.0;              // disc, ball
  double collar_width = 0.0;        // 0 selects the default
  double taper_width = -1.0;        // < 0 selects the default
  double major_radius = 2.0;        // solid-torus
  double minor_radius = 1.0;
  double sigma_a = 1.0;  // solid-torus: σ∞ = a dθ + b dφ
  double sigma_b = 0.0;
  double length = 1.0;          // log-cylinder
  double beta = 0.0;            // log-cylinder: β = c du∧dθ
  double field_strength = 2.0;  // plane
  ProfileSpec profile;
  PerturbationSpec perturbation;
  ParticleParams particle;
};

inline int scenario_dimension(const std::string& name) {
  if (name == "disc" || name == "log-cylinder" || name == "plane") return 2;
  if (name == "ball" || name == "solid-torus") return 3;
  throw ConfigError("scenario.name: unknown scenario '" + name +
                    "' (expected disc, ball, solid-torus, log-cylinder or plane)");
}

template <int D>
struct Scenario {
  static constexpr int Dim = D;
  ScenarioSpec spec;
  System<D> system;
  // Collar decomposition; absent for the plane.
  std::optional<MagneticField<D>> field;
  // ∂_θ of an adapted chart, g⁻¹σ/|σ|²; nullopt where σ vanishes. Empty for
  // scenarios without σ.
  std::function<std::optional<Vec<D>>(const Vec<D>&)> theta_direction;
  // Uniform point of the embedded domain, in chart coordinates.
  std::function<Vec<D>(Rng&)> random_point;

  double collar_width() const { return field ? field->collar.width : 0.0; }
};

using AnyScenario = std::variant<Scenario<2>, Scenario<3>>;

// ---------------------------------------------------------------------------

inline BlowUpProfile zero_profile(double width) {
  BlowUpProfile p;
  p.name = "zero";
  p.f = [](double) { return 0.0; };
  p.antiderivative = [](double) { return 0.0; };
  p.width = width;
  return p;
}

inline BlowUpProfile make_profile(const ProfileSpec& spec, const std::string& fallback, double width) {
  const std::string kind = spec.kind.empty() ? fallback : spec.kind;
  if (kind == "zero") return zero_profile(width);
  if (!(spec.coefficient != 0.0) || !std::isfinite(spec.coefficient))
    throw ConfigError("scenario.profile.coefficient must be finite and nonzero");
  if (kind == "inverse") return inverse_profile(width, spec.coefficient);
  if (kind == "inverse-square") return inverse_square_profile(width, spec.coefficient);
  if (kind == "power") {
    if (!(spec.exponent >= 1.0)) throw ConfigError("scenario.profile.exponent must be >= 1");
    return power_profile(width, spec.coefficient, spec.exponent);
  }
  if (kind == "cutoff") {
    if (!(spec.exponent >= 1.0)) throw ConfigError("scenario.profile.exponent must be >= 1");
    if (!(spec.cutoff > 0.0 && spec.cutoff < width))
      throw ConfigError("scenario.profile.cutoff must lie in (0, collar_width)");
    return cutoff_profile(width, spec.coefficient, spec.exponent, spec.cutoff);
  }
  throw ConfigError("scenario.profile.kind: unknown profile '" + kind +
                    "' (expected zero, inverse, inverse-square, power or cutoff)");
}

namespace detail {

inline void require_perturbation_kind(const PerturbationSpec& p) {
  if (p.kind != "zero" && p.kind != "constant" && p.kind != "polynomial")
    throw ConfigError("scenario.perturbation.kind: unknown kind '" + p.kind +
                      "' (expected zero, constant or polynomial)");
}

// (c0 + cx x + cy y) dx∧dy on a region with |x|, |y| ≤ extent.
inline std::pair<TwoForm<2>, PerturbationBounds> planar_perturbation(const PerturbationSpec& p, double extent) {
  require_perturbation_kind(p);
  const double c0 = p.kind == "zero" ? 0.0 : p.constant[0];
  const double cx = p.kind == "polynomial" ? p.linear[0] : 0.0;
  const double cy = p.kind == "polynomial" ? p.linear[1] : 0.0;
  TwoForm<2> per{[c0, cx, cy](const Vec<2>& q) {
    TwoFormValue<2> b;
    b.set(0, 1, c0 + cx * q[0] + cy * q[1]);
    return b;
  }};
  PerturbationBounds bounds{std::abs(c0) + (std::abs(cx) + std::abs(cy)) * extent,
                            std::max(std::abs(cx), std::abs(cy))};
  return {per, bounds};
}

// B⃗ = c + (α y, β z, γ x) on a box |x|, |y| ≤ ex, |z| ≤ ez.
inline std::pair<TwoForm<3>, PerturbationBounds> spatial_perturbation(const PerturbationSpec& p, double ex,
                                                                       double ez) {
  require_perturbation_kind(p);
  Vec<3> c = Vec<3>::Zero();
  Vec<3> k = Vec<3>::Zero();
  if (p.kind != "zero") c = Vec<3>(p.constant[0], p.constant[1], p.constant[2]);
  if (p.kind == "polynomial") k = Vec<3>(p.linear[0], p.linear[1], p.linear[2]);
  TwoForm<3> per{[c, k](const Vec<3>& q) {
    return encode_vector(Vec<3>(c[0] + k[0] * q[1], c[1] + k[1] * q[2], c[2] + k[2] * q[0]));
  }};
  const double value = std::max({std::abs(c[0]) + std::abs(k[0]) * ex, std::abs(c[1]) + std::abs(k[1]) * ez,
                                 std::abs(c[2]) + std::abs(k[2]) * ex});
  return {per, PerturbationBounds{value, k.cwiseAbs().maxCoeff()}};
}

template <int D>
std::function<std::optional<Vec<D>>(const Vec<D>&)> sigma_dual_direction(const Metric<D>& metric,
                                                                          const OneForm<D>& sigma) {
  return [metric, sigma](const Vec<D>& q) -> std::optional<Vec<D>> {
    const Vec<D> s = sigma(q);
    const Vec<D> up = metric.euclidean ? s : Vec<D>(metric.at(q).ldlt().solve(s));
    const double norm2 = s.dot(up);
    if (!(norm2 > 1e-24) || !std::isfinite(norm2)) return std::nullopt;
    return Vec<D>(up / norm2);
  };
}

template <int D>
Vec<D> box_point(Rng& rng, const Vec<D>& lo, const Vec<D>& hi) {
  Vec<D> q;
  for (int i = 0; i < D; ++i) q[i] = rng.uniform(lo[i], hi[i]);
  return q;
}

template <int D>
std::function<Vec<D>(Rng&)> rejection_sampler(Chart<D> chart, Vec<D> lo, Vec<D> hi) {
  return [chart, lo, hi](Rng& rng) {
    for (;;) {
      const Vec<D> q = box_point<D>(rng, lo, hi);
      if (chart.contains(q)) return q;
    }
  };
}

inline double default_or(double value, double fallback) { return value > 0.0 ? value : fallback; }

template <int D>
void finish_system(Scenario<D>& s, const MagneticField<D>& field, double gauge) {
  s.system.field = field.total;
  s.system.collar = field.collar;
  const auto sigma = field.sigma;
  s.system.zero_locus_norm = [sigma](const Vec<D - 1>& x) { return sigma.norm(x); };
  s.system.potential = assemble_potential(field, gauge);
  s.theta_direction = sigma_dual_direction<D>(s.system.metric, field.sigma.pullback);
  s.field = field;
}

inline void require_collar(double radius, double width, double taper, const std::string& what) {
  if (!(width > 0.0 && width < radius))
    throw ConfigError("scenario.collar_width must lie in (0, " + what + ")");
  if (!(taper >= 0.0 && width + taper < radius))
    throw ConfigError("scenario.taper_width must be >= 0 with collar_width + taper_width < " + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Disc of radius R, σ∞ = dθ. Cartesian chart by default; the polar chart
// (r, θ) is available for fields without perturbation.

inline Scenario<2> build_disc(const ScenarioSpec& spec) {
  const double R = spec.radius;
  if (!(R > 0.0)) throw ConfigError("scenario.radius must be positive");
  const double eps = detail::default_or(spec.collar_width, 0.5 * R);
  const double taper = spec.taper_width >= 0.0 ? spec.taper_width : 0.5 * (R - eps);
  detail::require_collar(R, eps, taper, "radius");

  Scenario<2> s;
  s.spec = spec;
  s.system.particle = spec.particle;
  MagneticField<2> field;
  field.profile = CollarProfile(make_profile(spec.profile, "inverse-square", eps), taper);
  field.sigma.boundary = [](const Vec<1>&) { return Vec<1>(1.0); };
  field.sigma.boundary_metric = [R](const Vec<1>&) { return Mat<1>::Constant(R * R); };
  field.collar.width = eps;

  if (spec.chart == "cartesian") {
    s.system.chart.names = {"x", "y"};
    s.system.chart.inside = [R](const Vec<2>& q) { return q.squaredNorm() < R * R; };
    s.system.metric = euclidean_metric<2>();
    field.collar.distance = [R](const Vec<2>& q) { return R - q.norm(); };
    field.collar.distance_gradient = [](const Vec<2>& q) -> Vec<2> {
      const double r = q.norm();
      return r > 0.0 ? Vec<2>(-q / r) : Vec<2>::Zero();
    };
    field.collar.project = [](const Vec<2>& q) { return Vec<1>(wrap_angle(std::atan2(q[1], q[0]))); };
    field.sigma.pullback.components = [](const Vec<2>& q) -> Vec<2> {
      const double r2 = q.squaredNorm();
      return r2 > 0.0 ? Vec<2>(Vec<2>(-q[1], q[0]) / r2) : Vec<2>::Zero();
    };
    field.sigma.pullback.jacobian = [](const Vec<2>& q) -> Mat<2> {
      const double x = q[0], y = q[1];
      const double r4 = q.squaredNorm() * q.squaredNorm();
      if (!(r4 > 0.0)) return Mat<2>::Zero();
      Mat<2> j;
      j << 2 * x * y, y * y - x * x, y * y - x * x, -2 * x * y;
      return j / r4;
    };
    field.sigma.primitive = [](const Vec<2>& q) { return std::atan2(q[1], q[0]); };
    auto [per, bounds] = detail::planar_perturbation(spec.perturbation, R);
    field.perturbation = per;
    field.bounds = bounds;
    s.random_point = detail::rejection_sampler<2>(s.system.chart, Vec<2>(-R, -R), Vec<2>(R, R));
  } else if (spec.chart == "polar") {
    if (spec.perturbation.kind != "zero")
      throw ConfigError("scenario.perturbation: the polar disc chart supports only kind = zero");
    s.system.chart = polar_chart();
    s.system.chart.inside = [R](const Vec<2>& q) { return q[0] > 0.0 && q[0] < R; };
    s.system.metric = polar_metric();
    field.collar.distance = [R](const Vec<2>& q) { return R - q[0]; };
    field.collar.distance_gradient = [](const Vec<2>&) { return Vec<2>(-1.0, 0.0); };
    field.collar.project = [](const Vec<2>& q) { return Vec<1>(wrap_angle(q[1])); };
    field.collar.normal_index = std::nullopt;
    field.sigma.pullback.components = [](const Vec<2>&) { return Vec<2>(0.0, 1.0); };
    field.sigma.pullback.jacobian = [](const Vec<2>&) { return Mat<2>::Zero(); };
    field.sigma.primitive = [](const Vec<2>& q) { return q[1]; };
    field.perturbation = TwoForm<2>::zero();
    s.random_point = [R](Rng& rng) {
      for (;;) {
        const Vec<2> x(rng.uniform(-R, R), rng.uniform(-R, R));
        const double r = x.norm();
        if (r > 0.0 && r < R) return Vec<2>(r, std::atan2(x[1], x[0]));
      }
    };
  } else {
    throw ConfigError("scenario.chart: unknown disc chart '" + spec.chart + "' (expected cartesian or polar)");
  }
  field.total = blowup_plus_perturbation(field.collar, field.profile, field.sigma.pullback, field.perturbation);
  detail::finish_system(s, field, -field.profile.core_value());
  return s;
}

// Ball of radius R with σ∞ = dh, h = z, pulled back through the radial
// projection: θ = R z / r, σ = dθ. Z(σ∞) is the two poles.
inline Scenario<3> build_ball(const ScenarioSpec& spec) {
  const double R = spec.radius;
  if (!(R > 0.0)) throw ConfigError("scenario.radius must be positive");
  if (spec.chart != "cartesian") throw ConfigError("scenario.chart: the ball supports only cartesian");
  const double eps = detail::default_or(spec.collar_width, 0.5 * R);
  const double taper = spec.taper_width >= 0.0 ? spec.taper_width : 0.5 * (R - eps);
  detail::require_collar(R, eps, taper, "radius");

  Scenario<3> s;
  s.spec = spec;
  s.system.particle = spec.particle;
  s.system.chart.names = {"x", "y", "z"};
  s.system.chart.inside = [R](const Vec<3>& q) { return q.squaredNorm() < R * R; };
  s.system.metric = euclidean_metric<3>();

  MagneticField<3> field;
  field.profile = CollarProfile(make_profile(spec.profile, "inverse", eps), taper);
  field.collar.width = eps;
  field.collar.distance = [R](const Vec<3>& q) { return R - q.norm(); };
  field.collar.distance_gradient = [](const Vec<3>& q) -> Vec<3> {
    const double r = q.norm();
    return r > 0.0 ? Vec<3>(-q / r) : Vec<3>::Zero();
  };
  field.collar.project = [](const Vec<3>& q) -> Vec<2> {
    const double r = q.norm();
    if (!(r > 0.0)) return Vec<2>::Zero();
    return Vec<2>(std::acos(std::clamp(q[2] / r, -1.0, 1.0)), wrap_angle(std::atan2(q[1], q[0])));
  };

  // Boundary coordinates (ϑ, φ): h = R cos ϑ.
  field.sigma.boundary = [R](const Vec<2>& x) { return Vec<2>(-R * std::sin(x[0]), 0.0); };
  field.sigma.boundary_metric = [R](const Vec<2>& x) -> Mat<2> {
    Mat<2> g = Mat<2>::Zero();
    g(0, 0) = R * R;
    g(1, 1) = R * R * std::sin(x[0]) * std::sin(x[0]);
    return g;
  };
  // sin of the angular distance to the nearer pole, exact zero at both poles.
  field.sigma.boundary_norm = [](const Vec<2>& x) {
    const double t = std::abs(x[0]);
    return std::sin(std::min(t, std::abs(std::numbers::pi - t)));
  };
  field.sigma.pullback.components = [R](const Vec<3>& q) -> Vec<3> {
    const double r = q.norm();
    if (!(r > 0.0)) return Vec<3>::Zero();
    const double r3 = r * r * r;
    return Vec<3>(-q[0] * q[2], -q[1] * q[2], q[0] * q[0] + q[1] * q[1]) * (R / r3);
  };
  // Hessian of R z / r.
  field.sigma.pullback.jacobian = [R](const Vec<3>& q) -> Mat<3> {
    const double r = q.norm();
    if (!(r > 0.0)) return Mat<3>::Zero();
    const double r3 = r * r * r, r5 = r3 * r * r;
    const double z = q[2];
    Mat<3> h;
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) {
        const double dj3 = j == 2 ? 1.0 : 0.0, dk3 = k == 2 ? 1.0 : 0.0, djk = j == k ? 1.0 : 0.0;
        h(k, j) = R * (-(dj3 * q[k] + dk3 * q[j] + z * djk) / r3 + 3.0 * z * q[j] * q[k] / r5);
      }
    return h;
  };
  field.sigma.primitive = [R](const Vec<3>& q) {
    const double r = q.norm();
    return r > 0.0 ? R * q[2] / r : 0.0;
  };
  auto [per, bounds] = detail::spatial_perturbation(spec.perturbation, R, R);
  field.perturbation = per;
  field.bounds = bounds;
  field.total = blowup_plus_perturbation(field.collar, field.profile, field.sigma.pullback, field.perturbation);
  s.random_point = detail::rejection_sampler<3>(s.system.chart, Vec<3>::Constant(-R), Vec<3>::Constant(R));
  detail::finish_system(s, field, -field.profile.core_value());
  return s;
}

// Solid torus of revolution (major R, minor r0) with σ∞ = a dθ + b dφ,
// θ toroidal and φ poloidal.
inline Scenario<3> build_solid_torus(const ScenarioSpec& spec) {
  const double R = spec.major_radius;
  const double r0 = spec.minor_radius;
  if (!(r0 > 0.0 && R > r0)) throw ConfigError("scenario.major_radius and minor_radius need major > minor > 0");
  if (spec.chart != "cartesian") throw ConfigError("scenario.chart: the solid torus supports only cartesian");
  if (spec.sigma_a == 0.0 && spec.sigma_b == 0.0)
    throw ConfigError("scenario.sigma_a and sigma_b: σ∞ must be nonzero");
  const double eps = detail::default_or(spec.collar_width, 0.5 * r0);
  const double taper = spec.taper_width >= 0.0 ? spec.taper_width : 0.25 * r0;
  detail::require_collar(r0, eps, taper, "minor_radius");
  const double a = spec.sigma_a, b = spec.sigma_b;
  const TorusShape shape{R, r0};

  Scenario<3> s;
  s.spec = spec;
  s.system.particle = spec.particle;
  s.system.chart.names = {"x", "y", "z"};
  s.system.chart.inside = [shape](const Vec<3>& q) { return shape.distance(q) > 0.0; };
  s.system.metric = euclidean_metric<3>();

  MagneticField<3> field;
  field.profile = CollarProfile(make_profile(spec.profile, "inverse-square", eps), taper);
  field.collar.width = eps;
  field.collar.distance = [shape](const Vec<3>& q) { return shape.distance(q); };
  field.collar.distance_gradient = [R](const Vec<3>& q) -> Vec<3> {
    const double rxy = std::hypot(q[0], q[1]);
    const double w = rxy - R;
    const double rho = std::hypot(w, q[2]);
    if (!(rho > 0.0 && rxy > 0.0)) return Vec<3>::Zero();
    return -Vec<3>(w * q[0] / (rxy * rho), w * q[1] / (rxy * rho), q[2] / rho);
  };
  field.collar.project = [R](const Vec<3>& q) {
    const double rxy = std::hypot(q[0], q[1]);
    return Vec<2>(wrap_angle(std::atan2(q[1], q[0])), wrap_angle(std::atan2(q[2], rxy - R)));
  };

  field.sigma.boundary = [a, b](const Vec<2>&) { return Vec<2>(a, b); };
  field.sigma.boundary_metric = [R, r0](const Vec<2>& x) -> Mat<2> {
    Mat<2> g = Mat<2>::Zero();
    const double w = R + r0 * std::cos(x[1]);
    g(0, 0) = w * w;
    g(1, 1) = r0 * r0;
    return g;
  };
  field.sigma.pullback.components = [R, a, b](const Vec<3>& q) -> Vec<3> {
    const double rxy2 = q[0] * q[0] + q[1] * q[1];
    if (!(rxy2 > 0.0)) return Vec<3>::Zero();
    Vec<3> s = a * Vec<3>(-q[1], q[0], 0.0) / rxy2;
    if (b != 0.0) {
      const double rxy = std::sqrt(rxy2);
      const double w = rxy - R;
      const double rho2 = w * w + q[2] * q[2];
      if (!(rho2 > 0.0)) return Vec<3>::Zero();
      s += b * Vec<3>(-q[2] * q[0] / rxy, -q[2] * q[1] / rxy, w) / rho2;
    }
    return s;
  };
  if (b == 0.0) {
    field.sigma.pullback.jacobian = [a](const Vec<3>& q) -> Mat<3> {
      const double x = q[0], y = q[1];
      const double r2 = x * x + y * y;
      Mat<3> j = Mat<3>::Zero();
      if (!(r2 > 0.0)) return j;
      j(0, 0) = 2 * x * y;
      j(0, 1) = j(1, 0) = y * y - x * x;
      j(1, 1) = -2 * x * y;
      return a * j / (r2 * r2);
    };
  }
  field.sigma.primitive = [R, a, b](const Vec<3>& q) {
    return a * std::atan2(q[1], q[0]) + b * std::atan2(q[2], std::hypot(q[0], q[1]) - R);
  };
  auto [per, bounds] = detail::spatial_perturbation(spec.perturbation, R + r0, r0);
  field.perturbation = per;
  field.bounds = bounds;
  field.total = blowup_plus_perturbation(field.collar, field.profile, field.sigma.pullback, field.perturbation);
  s.random_point = detail::rejection_sampler<3>(s.system.chart, Vec<3>(-(R + r0), -(R + r0), -r0),
                                                Vec<3>(R + r0, R + r0, r0));
  detail::finish_system(s, field, -field.profile.core_value());
  return s;
}

// Flat cylinder (0, L) × S¹ in coordinates (u, θ), both ends boundary, with
// B = (1/u − 1/(L − u) + c) du∧dθ. Near each end this is (1/n) dn∧dθ plus a
// bounded remainder; the remainder includes the other end's term.
inline Scenario<2> build_log_cylinder(const ScenarioSpec& spec) {
  const double L = spec.length;
  if (!(L > 0.0)) throw ConfigError("scenario.length must be positive");
  if (spec.chart != "cartesian" && spec.chart != "collar")
    throw ConfigError("scenario.chart: the log-cylinder has a single (u, theta) chart");
  const double eps = 0.5 * L;
  if (spec.collar_width > 0.0 && std::abs(spec.collar_width - eps) > 1e-12 * L)
    throw ConfigError("scenario.collar_width: the log-cylinder collar is fixed at length/2");
  if (!spec.profile.kind.empty() && (spec.profile.kind != "inverse" || spec.profile.coefficient != 1.0))
    throw ConfigError("scenario.profile: the log-cylinder uses the fixed profile 1/n");
  if (spec.perturbation.kind != "zero")
    throw ConfigError("scenario.perturbation: the log-cylinder takes its bounded part from scenario.beta");
  const double c = spec.beta;

  Scenario<2> s;
  s.spec = spec;
  s.system.particle = spec.particle;
  s.system.chart.names = {"u", "theta"};
  s.system.chart.periodic = {false, true};
  s.system.chart.inside = [L](const Vec<2>& q) { return q[0] > 0.0 && q[0] < L; };
  s.system.metric = euclidean_metric<2>();

  MagneticField<2> field;
  field.profile = CollarProfile(inverse_profile(eps, 1.0), 0.0);
  field.collar.width = eps;
  field.collar.distance = [L](const Vec<2>& q) { return std::min(q[0], L - q[0]); };
  field.collar.distance_gradient = [L](const Vec<2>& q) {
    return q[0] < 0.5 * L ? Vec<2>(1.0, 0.0) : Vec<2>(-1.0, 0.0);
  };
  field.collar.project = [](const Vec<2>& q) { return Vec<1>(wrap_angle(q[1])); };
  field.collar.normal_index = 0;
  field.sigma.boundary = [](const Vec<1>&) { return Vec<1>(1.0); };
  field.sigma.boundary_metric = [](const Vec<1>&) { return Mat<1>::Identity(); };
  field.sigma.pullback.components = [](const Vec<2>&) { return Vec<2>(0.0, 1.0); };
  field.sigma.pullback.jacobian = [](const Vec<2>&) { return Mat<2>::Zero(); };
  field.sigma.primitive = [](const Vec<2>& q) { return q[1]; };

  field.total = TwoForm<2>{[L, c](const Vec<2>& q) {
    TwoFormValue<2> v;
    v.set(0, 1, 1.0 / q[0] - 1.0 / (L - q[0]) + c);
    return v;
  }};
  field.perturbation = TwoForm<2>{[L, c](const Vec<2>& q) {
    TwoFormValue<2> v;
    v.set(0, 1, q[0] < 0.5 * L ? c - 1.0 / (L - q[0]) : c + 1.0 / q[0]);
    return v;
  }};
  field.bounds = PerturbationBounds{std::abs(c) + 2.0 / L, 4.0 / (L * L)};
  // A = (ln(u (L − u)/ε) + c u) dθ, split at the midline into F(n) dθ + A_per.
  OneForm<2> aper;
  aper.components = [L, c](const Vec<2>& q) {
    const double u = q[0];
    return Vec<2>(0.0, (u < 0.5 * L ? std::log(L - u) : std::log(u)) + c * u);
  };
  aper.jacobian = [L, c](const Vec<2>& q) {
    const double u = q[0];
    Mat<2> j = Mat<2>::Zero();
    j(0, 1) = (u < 0.5 * L ? -1.0 / (L - u) : 1.0 / u) + c;
    return j;
  };
  field.perturbation_primitive = aper;
  s.random_point = [L](Rng& rng) {
    for (;;) {
      const Vec<2> q(rng.uniform(0.0, L), rng.uniform(0.0, kTwoPi));
      if (q[0] > 0.0) return q;
    }
  };
  detail::finish_system(s, field, 0.0);
  return s;
}

// Uniform B₀ dx∧dy on the plane with A = B₀ x dy. No boundary.
inline Scenario<2> build_plane(const ScenarioSpec& spec) {
  const double b0 = spec.field_strength;
  if (!std::isfinite(b0)) throw ConfigError("scenario.field_strength must be finite");
  Scenario<2> s;
  s.spec = spec;
  s.system.particle = spec.particle;
  s.system.chart.names = {"x", "y"};
  s.system.metric = euclidean_metric<2>();
  TwoFormValue<2> b;
  b.set(0, 1, b0);
  s.system.field = TwoForm<2>::constant(b);
  Potential<2> pot;
  pot.form.components = [b0](const Vec<2>& q) { return Vec<2>(0.0, b0 * q[0]); };
  pot.form.jacobian = [b0](const Vec<2>&) {
    Mat<2> j = Mat<2>::Zero();
    j(0, 1) = b0;
    return j;
  };
  pot.perturbation = pot.form;
  pot.theta_part = [](const Vec<2>&) { return 0.0; };
  s.system.potential = pot;
  s.random_point = [](Rng& rng) { return Vec<2>(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)); };
  return s;
}

// ---------------------------------------------------------------------------
// Sampling helpers.

template <int D>
Vec<D> random_interior_point(const Scenario<D>& s, Rng& rng, double min_n, double max_n =
                                 std::numeric_limits<double>::infinity()) {
  for (long tries = 0; tries < 10'000'000; ++tries) {
    const Vec<D> q = s.random_point(rng);
    const double n = s.system.boundary_distance(q);
    if (n >= min_n && n <= max_n) return q;
  }
  throw ConfigError("sampler.min_n: no interior points found with the requested boundary distance");
}

// g-unit vector from a uniform direction u: v = L⁻ᵀu with g = LLᵀ.
template <int D>
Vec<D> random_unit_velocity(const System<D>& sys, const Vec<D>& q, Rng& rng) {
  const Vec<D> u = rng.direction<D>();
  if (sys.metric.euclidean) return u;
  const Eigen::LLT<Mat<D>> llt(sys.metric.at(q));
  return llt.matrixU().solve(u);
}

// The simple part f(n) dn∧σ alone, for checks that need B_per = 0.
template <int D>
MagneticField<D> simple_part(const MagneticField<D>& field) {
  MagneticField<D> out = field;
  out.total = TwoForm<D>{[field](const Vec<D>& q) { return field.blowup(q); }};
  out.perturbation = TwoForm<D>::zero();
  out.bounds = {};
  out.perturbation_primitive.reset();
  return out;
}

// ---------------------------------------------------------------------------
// Construction with validation.

struct ValidationReport {
  double closedness = 0.0;      // worst relative dB residual
  bool richardson_consistent = true;
  double bound_value_ratio = 0.0;     // sampled sup|B_per| / declared
  double bound_gradient_ratio = 0.0;  // sampled sup|∇B_per| / declared
};

// Central-difference step for derivative checks at boundary distance n.
inline double check_step(double n) { return 1e-3 * std::clamp(n, 1e-3, 1.0); }

template <int D>
double sampled_gradient(const TwoForm<D>& per, const Collar<D>& collar, const Vec<D>& q, double h, bool& usable) {
  // The cylinder perturbation switches at the midline, so stencils spanning
  // a change of collar side are skipped.
  const Vec<D> dn = collar.distance_gradient(q);
  double g = 0.0;
  usable = true;
  for (int k = 0; k < D; ++k) {
    const Vec<D> e = unit<D>(k) * h;
    if ((collar.distance_gradient(q + e) - dn).norm() > 0.5 || (collar.distance_gradient(q - e) - dn).norm() > 0.5) {
      usable = false;
      return 0.0;
    }
    g = std::max(g, ((1.0 / (2.0 * h)) * (per(q + e) - per(q - e))).max_abs());
  }
  return g;
}

template <int D>
ValidationReport validate_scenario(const Scenario<D>& s, int points = 20, std::uint64_t seed = 0x5eed) {
  ValidationReport rep;
  if (!s.field) return rep;
  const auto& field = *s.field;
  Rng rng(seed);
  for (int i = 0; i < points; ++i) {
    const Vec<D> q = random_interior_point(s, rng, 1e-2);
    const double n = field.collar.distance(q);
    const double h = check_step(n);
    if constexpr (D >= 3) {
      const auto c = closedness(field.total, s.system.chart, q, h);
      rep.closedness = std::max(rep.closedness, c.relative);
      rep.richardson_consistent = rep.richardson_consistent && c.consistent;
    }
    if (field.bounds.value > 0.0)
      rep.bound_value_ratio = std::max(rep.bound_value_ratio, field.perturbation(q).max_abs() / field.bounds.value);
    bool usable = true;
    const double grad = sampled_gradient(field.perturbation, field.collar, q, 1e-4, usable);
    if (usable && field.bounds.gradient > 0.0)
      rep.bound_gradient_ratio = std::max(rep.bound_gradient_ratio, grad / field.bounds.gradient);
    else if (usable && grad > 1e-9)
      rep.bound_gradient_ratio = std::numeric_limits<double>::infinity();
  }
  return rep;
}

template <int D>
void require_valid(const Scenario<D>& s) {
  const ValidationReport rep = validate_scenario(s);
  if (!(rep.closedness <= 1e-6) || !rep.richardson_consistent)
    throw ConfigError("scenario validation: field is not closed (relative dB residual " +
                      std::to_string(rep.closedness) + ")");
  if (!(rep.bound_value_ratio <= 1.01))
    throw ConfigError("scenario validation: perturbation exceeds its declared bound");
  if (!(rep.bound_gradient_ratio <= 1.01))
    throw ConfigError("scenario validation: perturbation gradient exceeds its declared bound");
}

inline AnyScenario build_scenario(const ScenarioSpec& spec) {
  if (!(spec.particle.mass > 0.0) || !std::isfinite(spec.particle.mass))
    throw ConfigError("scenario.particle.mass must be positive");
  if (!std::isfinite(spec.particle.charge)) throw ConfigError("scenario.particle.charge must be finite");
  AnyScenario out = [&]() -> AnyScenario {
    if (spec.name == "disc") return build_disc(spec);
    if (spec.name == "ball") return build_ball(spec);
    if (spec.name == "solid-torus") return build_solid_torus(spec);
    if (spec.name == "log-cylinder") return build_log_cylinder(spec);
    if (spec.name == "plane") return build_plane(spec);
    scenario_dimension(spec.name);  // throws with the accepted names
    throw ConfigError("scenario.name: unknown scenario");
  }();
  std::visit([](const auto& s) { require_valid(s); }, out);
  return out;
}

template <int D>
Scenario<D> build_scenario_as(const ScenarioSpec& spec) {
  AnyScenario any = build_scenario(spec);
  if (auto* s = std::get_if<Scenario<D>>(&any)) return std::move(*s);
  throw ConfigError("scenario.name: '" + spec.name + "' is not a " + std::to_string(D) + "d scenario");
}

}  // namespace magtrap

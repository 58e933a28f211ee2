#include <gtest/gtest.h>

#include "magtrap/magtrap.hpp"

using namespace magtrap;

namespace {

ScenarioSpec named(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  return s;
}

ScenarioSpec free_disc() {
  ScenarioSpec s = named("disc");
  s.profile.kind = "zero";
  return s;
}

ScenarioSpec plane(double b0) {
  ScenarioSpec s = named("plane");
  s.field_strength = b0;
  return s;
}

template <int D>
ParticleState<D> lorentz_state(const Vec<D>& q, const Vec<D>& v) {
  ParticleState<D> s;
  s.q = q;
  s.w = v;
  return s;
}

IntegratorConfig precise(double horizon, double cadence = 0.01) {
  IntegratorConfig cfg;
  cfg.method = Method::dop853;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  cfg.horizon = horizon;
  cfg.cadence = cadence;
  return cfg;
}

// Central-difference gradient of H in q and p.
template <int D>
std::pair<Vec<D>, Vec<D>> hamiltonian_gradient(const System<D>& sys, const Vec<D>& q, const Vec<D>& p, double h) {
  Vec<D> dq, dp;
  for (int k = 0; k < D; ++k) {
    const Vec<D> e = unit<D>(k) * h;
    dq[k] = (energy(sys, Formulation::hamiltonian, Vec<D>(q + e), p) -
             energy(sys, Formulation::hamiltonian, Vec<D>(q - e), p)) / (2 * h);
    dp[k] = (energy(sys, Formulation::hamiltonian, q, Vec<D>(p + e)) -
             energy(sys, Formulation::hamiltonian, q, Vec<D>(p - e))) / (2 * h);
  }
  return {dq, dp};
}

Vec<2> rotate(const Vec<2>& x, double a) {
  return Vec<2>(std::cos(a) * x[0] - std::sin(a) * x[1], std::sin(a) * x[0] + std::cos(a) * x[1]);
}

}  // namespace

TEST(LorentzRhs, FreeParticleMovesStraight) {
  const auto scn = build_scenario_as<2>(free_disc());
  const auto d = lorentz_rhs(scn.system, Vec<2>(0.1, 0.2), Vec<2>(1.0, 0.0));
  EXPECT_EQ(d.dq, Vec<2>(1.0, 0.0));
  EXPECT_EQ(d.dw, Vec<2>::Zero());
}

TEST(LorentzRhs, ConstantPlanarField) {
  const auto scn = build_scenario_as<2>(plane(2.0));
  const Vec<2> v(1.0, 0.0);
  const auto d = lorentz_rhs(scn.system, Vec<2>(0.3, -0.1), v);
  // m q̈ = −e B J q̇ with J the rotation by +π/2.
  Mat<2> J;
  J << 0, -1, 1, 0;
  const Vec<2> oracle = -2.0 * (J * v);
  EXPECT_EQ(d.dw, oracle);
  EXPECT_EQ(d.dw, Vec<2>(0.0, -2.0));
}

TEST(LorentzRhs, PolarChartGeodesic) {
  ScenarioSpec spec = free_disc();
  spec.chart = "polar";
  const auto scn = build_scenario_as<2>(spec);
  const auto d = lorentz_rhs(scn.system, Vec<2>(0.5, 0.0), Vec<2>(0.0, 1.0));
  // Oracle: the line x = 0.5, y = 0.5 t in polar coordinates.
  auto polar = [](double t) {
    const double x = 0.5, y = 0.5 * t;
    return Vec<2>(std::hypot(x, y), std::atan2(y, x));
  };
  const double h = 1e-4;
  const Vec<2> acc = (polar(h) - 2.0 * polar(0.0) + polar(-h)) / (h * h);
  EXPECT_NEAR(d.dw[0], 0.5, 1e-14);
  EXPECT_NEAR(d.dw[1], 0.0, 1e-14);
  EXPECT_NEAR(acc[0], d.dw[0], 1e-6);
  EXPECT_NEAR(acc[1], d.dw[1], 1e-6);
}

TEST(LorentzRhs, OutsideDomainThrows) {
  const auto scn = build_scenario_as<2>(named("disc"));
  EXPECT_THROW(lorentz_rhs(scn.system, Vec<2>(1.1, 0.0), Vec<2>(1.0, 0.0)), DomainError);
}

TEST(HamiltonianRhs, FreeParticle) {
  const auto scn = build_scenario_as<2>(plane(0.0));
  const auto d = hamiltonian_rhs(scn.system, Vec<2>(0.4, 0.4), Vec<2>(0.0, 1.0));
  EXPECT_EQ(d.dq, Vec<2>(0.0, 1.0));
  EXPECT_EQ(d.dw, Vec<2>::Zero());
}

TEST(HamiltonianRhs, DiscAngularMomentumConservedOnRadialRay) {
  const auto scn = build_scenario_as<2>(named("disc"));
  for (double r : {0.2, 0.6, 0.95}) {
    const Vec<2> q(r, 0.0);
    const Vec<2> p = to_momentum(scn.system, q, Vec<2>(1.0, 0.0));
    const auto d = hamiltonian_rhs(scn.system, q, p);
    // p_θ = x p_y − y p_x; its rate from the right-hand side.
    const double pdot_theta = d.dq[0] * p[1] + q[0] * d.dw[1] - d.dq[1] * p[0] - q[1] * d.dw[0];
    // Oracle: ∂H/∂θ by rotating (q, p) together.
    const double h = 1e-6;
    const double dh = (energy(scn.system, Formulation::hamiltonian, rotate(q, h), rotate(p, h)) -
                       energy(scn.system, Formulation::hamiltonian, rotate(q, -h), rotate(p, -h))) / (2 * h);
    EXPECT_NEAR(dh, 0.0, 1e-7 * (1.0 + p.norm()));
    EXPECT_NEAR(pdot_theta, -dh, 1e-7 * (1.0 + p.norm()));
  }
  ScenarioSpec spec = named("disc");
  spec.chart = "polar";
  const auto polar = build_scenario_as<2>(spec);
  const Vec<2> q(0.7, 1.2);
  const Vec<2> p = to_momentum(polar.system, q, Vec<2>(-1.0, 0.0));
  EXPECT_NEAR(hamiltonian_rhs(polar.system, q, p).dw[1], 0.0, 1e-12);
}

TEST(HamiltonianRhs, ConstantFieldMomentumRate) {
  const double b0 = 2.0;
  const auto scn = build_scenario_as<2>(plane(b0));
  const Vec<2> q(0.3, -0.2), p(0.5, 1.1);
  const auto d = hamiltonian_rhs(scn.system, q, p);
  // H = (p_x² + (p_y − e B₀ x)²)/2m, so ṗ_x = −∂H/∂x = (e/m)(p_y − e B₀ x) B₀.
  EXPECT_NEAR(d.dw[0], (p[1] - b0 * q[0]) * b0, 1e-14);
  EXPECT_NEAR(d.dw[1], 0.0, 1e-14);
  EXPECT_NEAR(d.dq[0], p[0], 1e-14);
  EXPECT_NEAR(d.dq[1], p[1] - b0 * q[0], 1e-14);
}

TEST(HamiltonianRhs, MatchesFiniteDifferencesOfH) {
  Rng rng(41);
  ScenarioSpec polar = named("disc");
  polar.chart = "polar";
  ScenarioSpec heavy = named("solid-torus");
  heavy.particle = {2.0, -1.5};
  for (const auto& spec : {named("disc"), polar, named("ball"), named("solid-torus"), heavy, named("log-cylinder"),
                           plane(2.0)}) {
    std::visit(
        [&](const auto& scn) {
          constexpr int D = std::decay_t<decltype(scn)>::Dim;
          for (int i = 0; i < 20; ++i) {
            const Vec<D> q = random_interior_point(scn, rng, 0.05);
            const Vec<D> v = random_unit_velocity(scn.system, q, rng);
            if (!scn.theta_direction || !scn.theta_direction(q)) continue;
            const Vec<D> p = to_momentum(scn.system, q, v);
            const auto d = hamiltonian_rhs(scn.system, q, p);
            const auto [dhq, dhp] = hamiltonian_gradient(scn.system, q, p, 1e-6);
            const double scale = 1.0 + p.norm() + d.dw.norm();
            EXPECT_LE((d.dq - dhp).norm(), 1e-6 * scale) << spec.name;
            EXPECT_LE((d.dw + dhq).norm(), 1e-5 * scale) << spec.name;
          }
        },
        build_scenario(spec));
  }
}

TEST(Energy, Examples) {
  const auto disc = build_scenario_as<2>(free_disc());
  EXPECT_EQ(energy(disc.system, Formulation::lorentz, Vec<2>(0.1, 0.1), Vec<2>(1.0, 0.0)), 0.5);
  ScenarioSpec spec = plane(0.0);
  spec.particle.mass = 2.0;
  const auto free = build_scenario_as<2>(spec);
  EXPECT_EQ(energy(free.system, Formulation::hamiltonian, Vec<2>(0.4, 0.0), Vec<2>(0.0, 1.0)), 0.25);
}

TEST(Energy, TorusCollarChartMatchesEmbeddedKineticEnergy) {
  const TorusShape shape{2.0, 1.0};
  System<3> sys;
  sys.chart = torus_collar_chart(shape);
  sys.metric = torus_collar_metric(shape);
  sys.field = TwoForm<3>::zero();
  auto embed = [](const Vec<3>& q) {
    const double rho = 1.0 - q[0];
    return Vec<3>((2.0 + rho * std::cos(q[2])) * std::cos(q[1]), (2.0 + rho * std::cos(q[2])) * std::sin(q[1]),
                  rho * std::sin(q[2]));
  };
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const Vec<3> q(rng.uniform(0.01, 0.9), rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi));
    const Vec<3> v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    // Fourth-order central difference of the embedding along v.
    const double h = 1e-3;
    const Vec<3> xdot = (8.0 * (embed(q + h * v) - embed(q - h * v)) - (embed(q + 2 * h * v) - embed(q - 2 * h * v))) /
                        (12.0 * h);
    EXPECT_NEAR(energy(sys, Formulation::lorentz, q, v), 0.5 * xdot.squaredNorm(), 1e-9);
  }
}

TEST(Conversion, RoundTripRecoversVelocity) {
  Rng rng(43);
  for (const char* name : {"disc", "ball", "solid-torus", "log-cylinder", "plane"}) {
    std::visit(
        [&](const auto& scn) {
          constexpr int D = std::decay_t<decltype(scn)>::Dim;
          for (int i = 0; i < 50; ++i) {
            const Vec<D> q = random_interior_point(scn, rng, 1e-3);
            const Vec<D> v = random_unit_velocity(scn.system, q, rng);
            const Vec<D> p = to_momentum(scn.system, q, v);
            const double scale = std::max(1.0, (*scn.system.potential)(q).norm());
            EXPECT_LE((to_velocity(scn.system, q, p) - v).norm(), 1e-12 * scale) << name;
            const auto s = convert(scn.system, lorentz_state<D>(q, v), Formulation::hamiltonian);
            EXPECT_NEAR(energy(scn.system, s), energy(scn.system, Formulation::lorentz, q, v), 1e-12 * scale * scale);
          }
        },
        build_scenario(named(name)));
  }
}

TEST(Conversion, NeedsPotential) {
  System<2> sys;
  sys.metric = euclidean_metric<2>();
  sys.field = TwoForm<2>::zero();
  EXPECT_THROW(to_momentum(sys, Vec<2>(Vec<2>::Zero()), Vec<2>(1, 0)), UnsupportedError);
}

TEST(Integrate, FreeParticleStraightLine) {
  const auto scn = build_scenario_as<2>(free_disc());
  IntegratorConfig cfg;
  cfg.horizon = 0.5;
  cfg.cadence = 0.05;
  const auto tr = integrate(scn.system, lorentz_state<2>(Vec<2>::Zero(), Vec<2>(1.0, 0.0)), cfg);
  const Sample<2>* at = nullptr;
  for (const auto& s : tr.samples)
    if (std::abs(s.t - 0.25) < 1e-12) at = &s;
  ASSERT_NE(at, nullptr);
  EXPECT_LE((at->q - Vec<2>(0.25, 0.0)).norm(), 1e-9);
  EXPECT_FALSE(tr.escaped());
}

TEST(Integrate, FreeParticleExitTime) {
  const auto scn = build_scenario_as<2>(free_disc());
  IntegratorConfig cfg;
  cfg.horizon = 5.0;
  const auto tr = integrate(scn.system, lorentz_state<2>(Vec<2>(0.2, 0.0), Vec<2>(1.0, 0.0)), cfg);
  ASSERT_TRUE(tr.escaped());
  const auto& e = *tr.escape();
  EXPECT_NEAR(e.t, 0.8 - cfg.escape_threshold, 1e-9);
  EXPECT_NEAR(e.boundary_time, 0.8, 1e-9);
  EXPECT_LE((e.exit_position - Vec<2>(1.0, 0.0)).norm(), 1e-9);
  EXPECT_NEAR(e.zero_locus_norm, 1.0, 1e-12);
}

TEST(Integrate, ConstantFieldCircleReturnsAtPi) {
  const auto scn = build_scenario_as<2>(plane(2.0));
  const Vec<2> q0(0.1, 0.2);
  const auto tr = integrate(scn.system, lorentz_state<2>(q0, Vec<2>(1.0, 0.0)), precise(std::numbers::pi));
  EXPECT_NEAR(tr.samples.back().t, std::numbers::pi, 1e-15);
  EXPECT_LE((tr.samples.back().q - q0).norm(), 1e-6);
  // Radius m|v|/(eB₀) about the centre q0 + (0, −1/2).
  const Vec<2> centre = q0 + Vec<2>(0.0, -0.5);
  for (const auto& s : tr.samples) EXPECT_NEAR((s.q - centre).norm(), 0.5, 1e-6);
}

TEST(Integrate, BallAxisEscapesAtUnitTime) {
  const auto scn = build_scenario_as<3>(named("ball"));
  IntegratorConfig cfg;
  cfg.horizon = 5.0;
  const auto tr = integrate(scn.system, lorentz_state<3>(Vec<3>::Zero(), Vec<3>(0, 0, 1)), cfg);
  ASSERT_TRUE(tr.escaped());
  const auto& e = *tr.escape();
  EXPECT_NEAR(e.boundary_time, 1.0, 1e-6);
  EXPECT_LE((e.exit_position - Vec<3>(0, 0, 1)).norm(), 1e-6);
  EXPECT_LE(e.zero_locus_norm, 1e-6);
  EXPECT_LE(std::abs(e.n - cfg.escape_threshold), 1e-9);
}

TEST(Integrate, StepFailuresAreEvents) {
  const auto scn = build_scenario_as<2>(named("disc"));
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  const auto tr = integrate(scn.system, lorentz_state<2>(Vec<2>(0.1, 0.0), Vec<2>(0.0, 1.0)), cfg);
  ASSERT_NE(tr.failure(), nullptr);
  EXPECT_EQ(tr.failure()->detail, "max steps exceeded");
  EXPECT_FALSE(tr.samples.empty());

  System<2> bad = build_scenario_as<2>(plane(1.0)).system;
  bad.field = TwoForm<2>{[](const Vec<2>& q) {
    TwoFormValue<2> b;
    b.set(0, 1, q[0] > 0.5 ? std::nan("") : 1.0);
    return b;
  }};
  const auto tr2 = integrate(bad, lorentz_state<2>(Vec<2>(0.0, 0.0), Vec<2>(1.0, 0.0)), IntegratorConfig{});
  ASSERT_NE(tr2.failure(), nullptr);
  EXPECT_LT(tr2.failure()->t, 1.0);
  EXPECT_FALSE(tr2.escaped());
}

TEST(Integrate, RejectsInvalidInput) {
  const auto scn = build_scenario_as<2>(named("disc"));
  const auto s = lorentz_state<2>(Vec<2>(0.1, 0.0), Vec<2>(1.0, 0.0));
  IntegratorConfig cfg;
  cfg.rel_tol = 0.0;
  EXPECT_THROW(integrate(scn.system, s, cfg), ConfigError);
  cfg = {};
  cfg.escape_threshold = 0.6;
  EXPECT_THROW(integrate(scn.system, s, cfg), ConfigError);
  cfg = {};
  cfg.cadence = -1.0;
  EXPECT_THROW(integrate(scn.system, s, cfg), ConfigError);
  EXPECT_THROW(integrate(scn.system, lorentz_state<2>(Vec<2>(1.5, 0.0), Vec<2>(1, 0)), IntegratorConfig{}), DomainError);
  EXPECT_THROW(integrate(scn.system, lorentz_state<2>(Vec<2>(0.99995, 0.0), Vec<2>(1, 0)), IntegratorConfig{}),
               DomainError);
}

TEST(Integrate, ImplicitMidpointConservesQuadraticEnergy) {
  const auto scn = build_scenario_as<2>(plane(2.0));
  IntegratorConfig cfg;
  cfg.method = Method::implicit_midpoint;
  cfg.fixed_step = 1e-3;
  cfg.horizon = std::numbers::pi;
  const Vec<2> q0(0.0, 0.0);
  ParticleState<2> s = convert(scn.system, lorentz_state<2>(q0, Vec<2>(1.0, 0.0)), Formulation::hamiltonian);
  const auto tr = integrate(scn.system, s, cfg);
  EXPECT_LE(tr.energy_drift, 1e-12);
  EXPECT_LE((tr.samples.back().q - q0).norm(), 1e-5);
}

TEST(Integrate, MethodsAgree) {
  const auto scn = build_scenario_as<2>(named("disc"));
  const auto s = lorentz_state<2>(Vec<2>(0.3, 0.4), Vec<2>(0.6, 0.8));
  IntegratorConfig a = precise(10.0, 0.1);
  IntegratorConfig b = a;
  b.method = Method::rk45;
  const auto ta = integrate(scn.system, s, a);
  const auto tb = integrate(scn.system, s, b);
  ASSERT_EQ(ta.samples.size(), tb.samples.size());
  for (std::size_t k = 0; k < ta.samples.size(); ++k) {
    EXPECT_EQ(ta.samples[k].t, tb.samples[k].t);
    EXPECT_LE((ta.samples[k].q - tb.samples[k].q).norm(), 1e-6);
  }
}

TEST(Integrate, TrajectoryInvariants) {
  Rng rng(44);
  const auto scn = build_scenario_as<3>(named("ball"));
  for (int i = 0; i < 10; ++i) {
    const Vec<3> q = random_interior_point(scn, rng, 0.3);
    const auto tr = integrate(scn.system, lorentz_state<3>(q, random_unit_velocity(scn.system, q, rng)),
                              precise(20.0, 0.05));
    for (std::size_t k = 1; k < tr.samples.size(); ++k) EXPECT_GT(tr.samples[k].t, tr.samples[k - 1].t);
    int escapes = 0;
    for (const auto& e : tr.events) escapes += e.kind == EventKind::escape;
    EXPECT_LE(escapes, 1);
    if (tr.escaped()) {
      EXPECT_LE(tr.samples.back().n, 1e-4 + 1e-9);
    }
  }
}

TEST(Diagnostics, ConfinedDiscThetaPotentialIsFOfN) {
  const auto scn = build_scenario_as<2>(named("disc"));
  const auto tr = integrate(scn.system, lorentz_state<2>(Vec<2>(0.3, 0.4), Vec<2>(1.0, 1.0).normalized()),
                            precise(100.0, 0.1));
  ASSERT_FALSE(tr.escaped());
  const auto series = diagnostics_series(tr, scn);
  const double gauge = scn.system.potential->gauge;
  int checked = 0;
  double amax = 0.0;
  for (const auto& d : series) {
    ASSERT_TRUE(d.a_theta.has_value());
    amax = std::max(amax, std::abs(*d.a_theta));
    if (d.n <= 0.5) {
      EXPECT_NEAR(*d.a_theta, 2.0 - 1.0 / d.n + gauge, 1e-9 * (1.0 + std::abs(*d.a_theta)));
      ++checked;
    }
    EXPECT_EQ(d.outside_collar, d.n >= 0.5);
  }
  EXPECT_GT(checked, 10);
  EXPECT_LE(amax, 1.0 / tr.min_n + std::abs(gauge) + 2.0);
}

TEST(Diagnostics, BallAxisThetaPotentialVanishes) {
  const auto scn = build_scenario_as<3>(named("ball"));
  IntegratorConfig cfg;
  cfg.horizon = 5.0;
  const auto tr = integrate(scn.system, lorentz_state<3>(Vec<3>::Zero(), Vec<3>(0, 0, 1)), cfg);
  const auto series = diagnostics_series(tr, scn);
  ASSERT_GT(series.size(), 10u);
  for (const auto& d : series) {
    ASSERT_TRUE(d.a_theta.has_value());
    EXPECT_EQ(*d.a_theta, 0.0);
    EXPECT_FALSE(d.p_theta.has_value());
  }
}

TEST(Diagnostics, StaticStateKeepsAngularMomentum) {
  const auto scn = build_scenario_as<2>(named("disc"));
  const auto tr = integrate(scn.system, lorentz_state<2>(Vec<2>(0.5, 0.3), Vec<2>::Zero()), precise(2.0, 0.1));
  const auto series = diagnostics_series(tr, scn);
  ASSERT_GT(series.size(), 10u);
  for (const auto& d : series) {
    ASSERT_TRUE(d.p_theta.has_value());
    EXPECT_EQ(*d.p_theta, *series.front().p_theta);
  }
}

TEST(LinearBoundFit, AffineSeries) {
  std::vector<double> t, y;
  for (int i = 0; i < 100; ++i) {
    t.push_back(0.1 * i);
    y.push_back(3.0 + 2.0 * t.back());
  }
  const auto fit = linear_bound_fit(t, y);
  EXPECT_NEAR(fit.c0, 3.0, 1e-10);
  EXPECT_NEAR(fit.c1, 2.0, 1e-10);
  EXPECT_LE(fit.violation, 1e-12);
}

TEST(LinearBoundFit, BoundedSeries) {
  std::vector<double> t, y;
  for (int i = 0; i < 2000; ++i) {
    t.push_back(0.05 * i);
    y.push_back(std::sin(t.back()));
  }
  const auto fit = linear_bound_fit(t, y);
  EXPECT_LE(fit.c1, 0.01);
  EXPECT_NEAR(fit.c0, 1.0, 0.02);
  EXPECT_LE(fit.violation, 0.01);
}

TEST(LinearBoundFit, LateGrowthIsAViolation) {
  std::vector<double> t, y;
  for (int i = 0; i < 100; ++i) {
    t.push_back(i);
    y.push_back(i < 50 ? 1.0 : 1.0 + (i - 50) * (i - 50));
  }
  EXPECT_GT(linear_bound_fit(t, y).violation, 0.5);
}

TEST(LinearBoundFit, Errors) {
  EXPECT_THROW(linear_bound_fit({0, 1, 2}, {1, 2, 3}), DomainError);
  EXPECT_THROW(linear_bound_fit(std::vector<double>(20, 1.0), std::vector<double>(20, 2.0)), DomainError);
  EXPECT_THROW(linear_bound_fit(std::vector<double>(20, 1.0), std::vector<double>(19, 2.0)), DomainError);
}

TEST(DynamicsProperty, EnergyAndSpeedConserved) {
  Rng rng(45);
  IntegratorConfig cfg;
  cfg.method = Method::dop853;
  cfg.horizon = 100.0;
  cfg.cadence = 1.0;
  for (const char* name : {"disc", "solid-torus", "log-cylinder", "plane"}) {
    std::visit(
        [&](const auto& scn) {
          constexpr int D = std::decay_t<decltype(scn)>::Dim;
          for (int i = 0; i < 3; ++i) {
            const Vec<D> q = random_interior_point(scn, rng, 0.25);
            const auto tr = integrate(scn.system, lorentz_state<D>(q, random_unit_velocity(scn.system, q, rng)), cfg);
            ASSERT_FALSE(tr.escaped()) << name;
            EXPECT_LE(tr.energy_drift, 1e-6) << name;
            EXPECT_LE(tr.speed_drift, 1e-6) << name;
          }
        },
        build_scenario(named(name)));
  }
}

TEST(DynamicsProperty, FormulationsAgree) {
  Rng rng(46);
  int compared = 0;
  for (const auto& spec : {named("disc"), plane(2.0)}) {
    const auto scn = build_scenario_as<2>(spec);
    for (int i = 0; i < 5; ++i) {
      const Vec<2> q = random_interior_point(scn, rng, 0.3);
      const auto s = lorentz_state<2>(q, random_unit_velocity(scn.system, q, rng));
      const auto cfg = precise(10.0, 0.05);
      const auto tl = integrate(scn.system, s, cfg);
      const auto th = integrate(scn.system, convert(scn.system, s, Formulation::hamiltonian), cfg);
      if (tl.min_n < 0.05) continue;
      ASSERT_EQ(tl.samples.size(), th.samples.size());
      double sup = 0.0;
      for (std::size_t k = 0; k < tl.samples.size(); ++k) sup = std::max(sup, (tl.samples[k].q - th.samples[k].q).norm());
      EXPECT_LE(sup, 1e-5) << spec.name;
      ++compared;
    }
  }
  EXPECT_GE(compared, 6);
}

TEST(DynamicsProperty, TimeReversalWithNegatedCharge) {
  Rng rng(47);
  for (const char* name : {"disc", "solid-torus", "plane"}) {
    std::visit(
        [&](const auto& scn) {
          constexpr int D = std::decay_t<decltype(scn)>::Dim;
          const Vec<D> q0 = random_interior_point(scn, rng, 0.3);
          const auto cfg = precise(10.0, 0.5);
          const auto fwd = integrate(scn.system, lorentz_state<D>(q0, random_unit_velocity(scn.system, q0, rng)), cfg);
          ASSERT_FALSE(fwd.escaped());
          System<D> reversed = scn.system;
          reversed.particle.charge = -reversed.particle.charge;
          const auto back =
              integrate(reversed, lorentz_state<D>(fwd.samples.back().q, Vec<D>(-fwd.samples.back().v)), cfg);
          EXPECT_LE((back.samples.back().q - q0).norm(), 1e-5) << name;
        },
        build_scenario(named(name)));
  }
}

TEST(DynamicsProperty, EscapesAreLocalizedAndRecorded) {
  Rng rng(48);
  const auto scn = build_scenario_as<3>(named("ball"));
  IntegratorConfig cfg;
  cfg.horizon = 20.0;
  int escapes = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec<3> q(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
    const Vec<3> v = Vec<3>(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 1.0).normalized();
    const auto tr = integrate(scn.system, lorentz_state<3>(q, v), cfg);
    if (!tr.escaped()) continue;
    ++escapes;
    const auto& e = *tr.escape();
    EXPECT_LE(std::abs(e.n - cfg.escape_threshold), 1e-9);
    EXPECT_TRUE(std::isfinite(e.zero_locus_norm));
    EXPECT_NEAR(e.zero_locus_norm, zero_locus_distance(scn.field->sigma, e.boundary_point), 0.0);
    EXPECT_LE(e.zero_locus_norm, 0.1);
  }
  EXPECT_GT(escapes, 0);
}

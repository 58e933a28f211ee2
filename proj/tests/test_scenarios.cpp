#include <gtest/gtest.h>

#include "magtrap/magtrap.hpp"

using namespace magtrap;

namespace {

ScenarioSpec named(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  return s;
}

// Gradient of a scalar function by fourth-order central differences.
Vec<3> gradient(const std::function<double(const Vec<3>&)>& f, const Vec<3>& q, double h = 1e-4) {
  Vec<3> g;
  for (int k = 0; k < 3; ++k) {
    const Vec<3> e = unit<3>(k) * h;
    g[k] = (8.0 * (f(q + e) - f(q - e)) - (f(q + 2 * e) - f(q - 2 * e))) / (12.0 * h);
  }
  return g;
}

double torus_n(const Vec<3>& q) { return 1.0 - std::hypot(std::hypot(q[0], q[1]) - 2.0, q[2]); }
double toroidal_angle(const Vec<3>& q) { return std::atan2(q[1], q[0]); }
double poloidal_angle(const Vec<3>& q) { return std::atan2(q[2], std::hypot(q[0], q[1]) - 2.0); }

}  // namespace

TEST(BuildScenario, DiscDensityAtRadiusNineTenths) {
  const auto scn = build_scenario_as<2>(named("disc"));
  for (double th : {0.0, 1.0, 2.5}) {
    const Vec<2> q = 0.9 * Vec<2>(std::cos(th), std::sin(th));
    // f(0.1) (−dr∧dθ) with dr∧dθ = dx∧dy / r.
    EXPECT_NEAR(std::abs(scn.system.field(q)(0, 1)), 111.1111111111111, 1e-9);
    EXPECT_LT(scn.system.field(q)(0, 1), 0.0);
  }
}

TEST(BuildScenario, DiscPolarChartAgreesWithCartesian) {
  ScenarioSpec spec = named("disc");
  spec.chart = "polar";
  const auto polar = build_scenario_as<2>(spec);
  const auto cart = build_scenario_as<2>(named("disc"));
  const double r = 0.8, th = 0.6;
  const Vec<2> x(r * std::cos(th), r * std::sin(th));
  // b_rθ = r b_xy.
  EXPECT_NEAR(polar.system.field(Vec<2>(r, th))(0, 1), r * cart.system.field(x)(0, 1), 1e-12);
  EXPECT_NEAR(polar.system.boundary_distance(Vec<2>(r, th)), cart.system.boundary_distance(x), 1e-15);
}

TEST(BuildScenario, BallZeroLocusExactlyAtPoles) {
  const auto scn = build_scenario_as<3>(named("ball"));
  const auto& field = *scn.field;
  for (double z : {1.0, -1.0}) {
    const Vec<2> b = field.collar.project(Vec<3>(0.0, 0.0, z));
    EXPECT_EQ(zero_locus_distance(field.sigma, b), 0.0) << z;
    EXPECT_EQ(scn.system.zero_locus_norm(b), 0.0) << z;
  }
  Rng rng(51);
  for (int i = 0; i < 1000; ++i) {
    const Vec<3> x = rng.direction<3>();
    if (std::abs(x[2]) > 1.0 - 1e-12) continue;
    EXPECT_GT(zero_locus_distance(field.sigma, field.collar.project(x)), 0.0);
  }
}

TEST(BuildScenario, TorusSigmaIsToroidalAngleDifferential) {
  const auto scn = build_scenario_as<3>(named("solid-torus"));
  Rng rng(52);
  for (int i = 0; i < 100; ++i) {
    const Vec<3> q = random_interior_point(scn, rng, 1e-2);
    EXPECT_LE((scn.field->sigma.pullback(q) - gradient(toroidal_angle, q)).norm(), 1e-8);
    const auto rep = closedness(scn.system.field, scn.system.chart, q, check_step(scn.system.boundary_distance(q)));
    EXPECT_LE(rep.relative, 1e-6);
    EXPECT_TRUE(rep.consistent);
  }
}

TEST(BuildScenario, TorusFieldIsCrossProductEncoding) {
  // The vector field f(n) ∇n × (a ∇θ + b ∇φ), computed from independent
  // distance and angle functions and encoded as a 2-form.
  Rng rng(53);
  for (double b : {0.0, 0.5}) {
    ScenarioSpec spec = named("solid-torus");
    spec.sigma_b = b;
    const auto scn = build_scenario_as<3>(spec);
    for (int i = 0; i < 100; ++i) {
      const Vec<3> q = random_interior_point(scn, rng, 1e-2, 0.5);
      const double n = torus_n(q);
      const Vec<3> s = gradient(toroidal_angle, q) + b * gradient(poloidal_angle, q);
      const Vec<3> bvec = (1.0 / (n * n)) * gradient(torus_n, q).cross(s);
      const auto expect = encode_vector(bvec);
      EXPECT_LE((scn.system.field(q) - expect).max_abs(), 1e-6 * (1.0 + expect.max_abs())) << "b=" << b;
    }
  }
}

TEST(BuildScenario, LogCylinderNormalForm) {
  ScenarioSpec spec = named("log-cylinder");
  spec.beta = 0.3;
  const auto scn = build_scenario_as<2>(spec);
  Rng rng(54);
  for (int i = 0; i < 100; ++i) {
    const Vec<2> q(rng.uniform(1e-3, 1.0 - 1e-3), rng.uniform(0, kTwoPi));
    const double u = q[0];
    EXPECT_NEAR(scn.system.field(q)(0, 1), 1.0 / u - 1.0 / (1.0 - u) + 0.3, 1e-12 * (1.0 + 1.0 / u + 1.0 / (1 - u)));
    // Near u = 0 the field is (1/n) dn∧dθ plus a bounded remainder.
    if (u < 0.5) {
      EXPECT_LE(std::abs(scn.system.field(q)(0, 1) - 1.0 / u), 0.3 + 2.0);
    }
  }
}

TEST(BuildScenario, PlaneIsUniform) {
  ScenarioSpec spec = named("plane");
  spec.field_strength = 2.0;
  const auto scn = build_scenario_as<2>(spec);
  EXPECT_FALSE(scn.field.has_value());
  EXPECT_EQ(scn.system.field(Vec<2>(5.0, -7.0))(0, 1), 2.0);
  EXPECT_TRUE(std::isinf(scn.system.boundary_distance(Vec<2>(5.0, -7.0))));
}

TEST(BuildScenario, EveryProfileKindBuilds) {
  for (const char* kind : {"zero", "inverse", "inverse-square", "power", "cutoff"}) {
    ScenarioSpec spec = named("disc");
    spec.profile.kind = kind;
    spec.profile.exponent = 1.5;
    spec.profile.cutoff = 0.1;
    const auto scn = build_scenario_as<2>(spec);
    const Vec<2> q(0.0, 0.95);
    const double n = 0.05;
    const double f = std::string(kind) == "zero" ? 0.0
                     : std::string(kind) == "inverse"   ? 1.0 / n
                     : std::string(kind) == "inverse-square" ? 1.0 / (n * n)
                                                             : std::pow(n, -1.5);
    EXPECT_NEAR(scn.field->profile.f(n), f, 1e-12 * (1.0 + f)) << kind;
    EXPECT_LE(exterior_derivative_residual(scn.system.potential->form, scn.system.field(q), scn.system.chart, q,
                                           check_step(n)),
              1e-6 * (1.0 + scn.system.field(q).max_abs()))
        << kind;
  }
}

TEST(BuildScenario, ChargeSignOnlyFlipsTheForce) {
  ScenarioSpec spec = named("ball");
  spec.particle.charge = -1.0;
  const auto neg = build_scenario_as<3>(spec);
  const auto pos = build_scenario_as<3>(named("ball"));
  const Vec<3> q(0.2, 0.1, 0.8), v(0.3, -0.5, 0.1);
  EXPECT_LE((lorentz_rhs(neg.system, q, v).dw + lorentz_rhs(pos.system, q, v).dw).norm(), 1e-12);
}

TEST(BuildScenario, ConstructionErrorsNameTheParameter) {
  auto message = [](ScenarioSpec spec) -> std::string {
    try {
      build_scenario(spec);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  ScenarioSpec s = named("solid-torus");
  s.major_radius = 0.5;
  EXPECT_NE(message(s).find("major_radius"), std::string::npos);
  s = named("disc");
  s.radius = -1.0;
  EXPECT_NE(message(s).find("radius"), std::string::npos);
  s = named("sphere");
  EXPECT_NE(message(s).find("scenario.name"), std::string::npos);
  s = named("disc");
  s.particle.mass = 0.0;
  EXPECT_NE(message(s).find("mass"), std::string::npos);
  s = named("disc");
  s.collar_width = 1.5;
  EXPECT_NE(message(s).find("collar"), std::string::npos);
  s = named("disc");
  s.chart = "polar";
  s.perturbation.kind = "constant";
  EXPECT_NE(message(s).find("perturbation"), std::string::npos);
  s = named("log-cylinder");
  s.profile.kind = "inverse-square";
  EXPECT_NE(message(s).find("profile"), std::string::npos);
  s = named("ball");
  s.perturbation.kind = "quadratic";
  EXPECT_NE(message(s).find("perturbation"), std::string::npos);
  EXPECT_THROW(build_scenario_as<3>(named("disc")), ConfigError);
}

TEST(BuildScenario, ValidationRejectsNonClosedField) {
  auto scn = build_scenario_as<3>(named("ball"));
  scn.system.field = TwoForm<3>{[](const Vec<3>& q) {
    TwoFormValue<3> v;
    v.set(0, 1, q[2]);
    return v;
  }};
  scn.field->total = scn.system.field;
  EXPECT_GT(validate_scenario(scn).closedness, 0.1);
  try {
    require_valid(scn);
    FAIL() << "expected a validation error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("closed"), std::string::npos);
  }
}

TEST(ScenarioProperty, SigmaNowhereVanishesOnToroidalBoundaries) {
  Rng rng(55);
  ScenarioSpec cyl = named("log-cylinder");
  cyl.beta = 0.3;
  for (const auto& spec : {named("disc"), cyl}) {
    const auto scn = build_scenario_as<2>(spec);
    for (int i = 0; i < 200; ++i)
      EXPECT_GE(scn.system.zero_locus_norm(Vec<1>(rng.uniform(0, kTwoPi))), 0.5) << spec.name;
  }
  // Torus: |dθ| = 1/(R + r0 cos φ) in the boundary metric. The floor is
  // 1/(R + r0), which reaches 0.5 only when R + r0 ≤ 2.
  for (auto [R, r0] : {std::pair{2.0, 1.0}, std::pair{1.5, 0.5}}) {
    ScenarioSpec spec = named("solid-torus");
    spec.major_radius = R;
    spec.minor_radius = r0;
    const auto scn = build_scenario_as<3>(spec);
    double lo = 1e300;
    for (int i = 0; i < 200; ++i) {
      const Vec<2> x(rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi));
      const double s = scn.system.zero_locus_norm(x);
      EXPECT_NEAR(s, 1.0 / (R + r0 * std::cos(x[1])), 1e-12);
      lo = std::min(lo, s);
    }
    EXPECT_GE(lo, 1.0 / (R + r0) - 1e-12);
    if (R + r0 <= 2.0) {
      EXPECT_GE(lo, 0.5);
    }
  }
}

TEST(ScenarioProperty, BuiltInsPassValidation) {
  ScenarioSpec disc = named("disc");
  disc.perturbation.kind = "polynomial";
  disc.perturbation.constant = {0.1, 0.0, 0.0};
  disc.perturbation.linear = {0.05, 0.0, 0.0};
  ScenarioSpec ball = named("ball");
  ball.perturbation.kind = "polynomial";
  ball.perturbation.constant = {0.1, 0.0, 0.2};
  ball.perturbation.linear = {0.2, -0.1, 0.3};
  ScenarioSpec torus = named("solid-torus");
  torus.sigma_b = 0.5;
  ScenarioSpec cyl = named("log-cylinder");
  cyl.beta = 0.3;
  for (const auto& spec : {named("disc"), disc, named("ball"), ball, named("solid-torus"), torus, cyl}) {
    std::visit(
        [&](const auto& scn) {
          const auto rep = validate_scenario(scn, 100, 99);
          EXPECT_LE(rep.closedness, 1e-6) << spec.name;
          EXPECT_TRUE(rep.richardson_consistent) << spec.name;
          EXPECT_LE(rep.bound_value_ratio, 1.01) << spec.name;
          EXPECT_LE(rep.bound_gradient_ratio, 1.01) << spec.name;
        },
        build_scenario(spec));
  }
}

TEST(Sampling, InteriorPointsRespectDistanceWindow) {
  Rng rng(56);
  const auto scn = build_scenario_as<3>(named("solid-torus"));
  for (int i = 0; i < 200; ++i) {
    const Vec<3> q = random_interior_point(scn, rng, 0.2, 0.4);
    EXPECT_GE(scn.system.boundary_distance(q), 0.2);
    EXPECT_LE(scn.system.boundary_distance(q), 0.4);
  }
  EXPECT_THROW(random_interior_point(scn, rng, 2.0), ConfigError);
}

TEST(Sampling, UnitVelocitiesInCurvedChart) {
  ScenarioSpec spec = named("disc");
  spec.chart = "polar";
  const auto scn = build_scenario_as<2>(spec);
  Rng rng(57);
  for (int i = 0; i < 100; ++i) {
    const Vec<2> q = random_interior_point(scn, rng, 0.1);
    EXPECT_NEAR(speed(scn.system, q, random_unit_velocity(scn.system, q, rng)), 1.0, 1e-12);
  }
}

TEST(Sampling, RngSequenceIsPortable) {
  // First outputs of mt19937_64 with seed 5489, fixed by the C++ standard.
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  EXPECT_EQ(x, 9981545732273789042ull);
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  Rng c(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_NEAR(c.direction<3>().norm(), 1.0, 1e-15);
  }
}

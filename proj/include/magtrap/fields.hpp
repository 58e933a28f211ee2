#pragma once

// Magnetic fields with boundary blow-up, B = f(n) dn∧σ + B_per on the collar,
// and their potentials A = F(n) σ + A_per with F(n) = −∫_n^ε f.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "magtrap/forms.hpp"
#include "magtrap/quadrature.hpp"

namespace magtrap {

enum class Divergence { plus_infinity, minus_infinity };

struct BlowUpProfile {
  std::string name;
  std::function<double(double)> f;
  // F(n) = −∫_n^ε f when known in closed form.
  std::function<double(double)> antiderivative;
  double width = 0.5;  // ε
  Divergence divergence = Divergence::plus_infinity;
  // Below the cutoff f is guaranteed nonzero.
  std::optional<double> cutoff;

  double operator()(double n) const { return f(n); }
};

inline Divergence divergence_of(double coefficient) {
  return coefficient >= 0.0 ? Divergence::plus_infinity : Divergence::minus_infinity;
}

inline BlowUpProfile inverse_profile(double width, double coefficient = 1.0) {
  BlowUpProfile p;
  p.name = "inverse";
  p.f = [coefficient](double n) { return coefficient / n; };
  p.antiderivative = [coefficient, width](double n) { return coefficient * std::log(n / width); };
  p.width = width;
  p.divergence = divergence_of(coefficient);
  return p;
}

inline BlowUpProfile inverse_square_profile(double width, double coefficient = 1.0) {
  BlowUpProfile p;
  p.name = "inverse-square";
  p.f = [coefficient](double n) { return coefficient / (n * n); };
  p.antiderivative = [coefficient, width](double n) { return coefficient * (1.0 / width - 1.0 / n); };
  p.width = width;
  p.divergence = divergence_of(coefficient);
  return p;
}

// f(n) = c n^(−α), α ≥ 1 so that ∫_0^ε f diverges.
inline BlowUpProfile power_profile(double width, double coefficient, double exponent) {
  if (!(exponent >= 1.0)) throw ConfigError("power profile exponent must be >= 1 for a divergent integral");
  if (exponent == 1.0) {
    auto p = inverse_profile(width, coefficient);
    p.name = "power";
    return p;
  }
  BlowUpProfile p;
  p.name = "power";
  p.f = [coefficient, exponent](double n) { return coefficient * std::pow(n, -exponent); };
  p.antiderivative = [coefficient, exponent, width](double n) {
    const double k = 1.0 - exponent;
    return coefficient * (std::pow(n, k) - std::pow(width, k)) / k;
  };
  p.width = width;
  p.divergence = divergence_of(coefficient);
  return p;
}

// C² step from 1 at s ≤ 0 to 0 at s ≥ 1.
inline double smooth_taper(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

// c n^(−α) switched off smoothly between the cutoff δ and ε. No closed-form
// antiderivative, so F goes through adaptive quadrature.
inline BlowUpProfile cutoff_profile(double width, double coefficient, double exponent, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < width)) throw ConfigError("profile cutoff must lie in (0, collar width)");
  if (!(exponent >= 1.0)) throw ConfigError("cutoff profile exponent must be >= 1");
  BlowUpProfile p;
  p.name = "cutoff";
  p.f = [=](double n) {
    return coefficient * std::pow(n, -exponent) * smooth_taper((n - cutoff) / (width - cutoff));
  };
  p.width = width;
  p.divergence = divergence_of(coefficient);
  p.cutoff = cutoff;
  return p;
}

inline double profile_antiderivative(const BlowUpProfile& p, double n) {
  if (!(n > 0.0) || n > p.width * (1.0 + 1e-15))
    throw DomainError("profile antiderivative needs 0 < n <= collar width, got n = " + std::to_string(n));
  if (p.antiderivative) return p.antiderivative(n);
  if (n >= p.width) return 0.0;
  return -quadrature::adaptive_simpson(p.f, n, p.width, 1e-10);
}

// The profile on (0, ε], continued past the collar with a smooth taper of
// the given width so the field vanishes in the core. taper_width = 0 keeps
// the field supported on the collar only.
class CollarProfile {
 public:
  CollarProfile() = default;
  CollarProfile(BlowUpProfile profile, double taper_width)
      : profile_(std::move(profile)), taper_(taper_width) {
    core_value_ = taper_ > 0.0 ? extension(width() + taper_) : 0.0;
  }

  const BlowUpProfile& profile() const { return profile_; }
  double width() const { return profile_.width; }
  double taper_width() const { return taper_; }

  // f̂(n)
  double f(double n) const {
    if (n <= width()) return profile_.f(n);
    if (taper_ <= 0.0 || n >= width() + taper_) return 0.0;
    return profile_.f(n) * smooth_taper((n - width()) / taper_);
  }

  // F̂(n) = −∫_n^ε f̂, so F̂' = f̂ everywhere and F̂ = F on the collar.
  double F(double n) const {
    if (n <= width()) return profile_antiderivative(profile_, n);
    if (taper_ <= 0.0) return 0.0;
    if (n >= width() + taper_) return core_value_;
    return extension(n);
  }

  // Value of F̂ in the field-free core.
  double core_value() const { return core_value_; }

 private:
  double extension(double n) const {
    return quadrature::integrate_fixed([this](double m) { return f(m); }, width(), n, 32);
  }

  BlowUpProfile profile_;
  double taper_ = 0.0;
  double core_value_ = 0.0;
};

// σ∞ on the boundary and its pullback σ = π*σ∞ to the collar.
template <int D>
struct SigmaField {
  std::function<Vec<D - 1>(const Vec<D - 1>&)> boundary;
  std::function<Mat<D - 1>(const Vec<D - 1>&)> boundary_metric;
  OneForm<D> pullback;
  // θ with dθ = σ, for scenarios that have one.
  std::function<double(const Vec<D>&)> primitive;
  // Closed-form |σ∞| where the boundary chart metric degenerates.
  std::function<double(const Vec<D - 1>&)> boundary_norm;

  double norm(const Vec<D - 1>& x) const {
    if (boundary_norm) return boundary_norm(x);
    const Vec<D - 1> s = boundary(x);
    const Mat<D - 1> g = boundary_metric(x);
    return std::sqrt(std::max(0.0, s.dot(g.ldlt().solve(s))));
  }
};

struct PerturbationBounds {
  double value = 0.0;     // sup |b_ij| in chart max-norm
  double gradient = 0.0;  // sup |∂_k b_ij|
};

template <int D>
struct MagneticField {
  TwoForm<D> total;
  CollarProfile profile;
  SigmaField<D> sigma;
  Collar<D> collar;
  // B − f(n) dn∧σ, meaningful on the collar.
  TwoForm<D> perturbation;
  PerturbationBounds bounds;
  // Closed-form primitive of the perturbation, when the scenario has one.
  std::optional<OneForm<D>> perturbation_primitive;
  // Centre of the star-shaped region used by the radial primitive.
  Vec<D> primitive_center = Vec<D>::Zero();
  // Where the perturbation is evaluable; empty means everywhere.
  std::function<bool(const Vec<D>&)> perturbation_domain;

  bool in_collar(const Vec<D>& q) const { return collar.distance(q) < collar.width; }

  // f(n) dn∧σ: the simple blow-up part, zero outside the collar.
  TwoFormValue<D> blowup(const Vec<D>& q) const {
    const double n = collar.distance(q);
    if (!(n > 0.0) || n > collar.width) return {};
    return profile.profile().f(n) * wedge<D>(collar.distance_gradient(q), sigma.pullback(q));
  }
};

// total = f̂(n) dn∧σ + B_per with the perturbation defined on the whole chart.
template <int D>
TwoForm<D> blowup_plus_perturbation(const Collar<D>& collar, const CollarProfile& profile,
                                    const OneForm<D>& sigma, const TwoForm<D>& perturbation) {
  return TwoForm<D>{[=](const Vec<D>& q) {
    const double n = collar.distance(q);
    const double fn = profile.f(n);
    TwoFormValue<D> b = perturbation(q);
    if (fn != 0.0) b += fn * wedge<D>(collar.distance_gradient(q), sigma(q));
    return b;
  }};
}

// ---------------------------------------------------------------------------
// Potentials.

// a_i(q) = (q−c)^j ∫_0^1 s b_ji(c + s(q−c)) ds, the homotopy primitive with
// d a = B_per on a region star-shaped about c.
template <int D>
Vec<D> radial_primitive(const TwoForm<D>& per, const Vec<D>& q, int nodes = 32,
                        const Vec<D>& center = Vec<D>::Zero(),
                        const std::function<bool(const Vec<D>&)>& domain = {}) {
  const Vec<D> x = q - center;
  if (domain) {
    if (!domain(q) || !domain(center))
      throw DomainError("radial segment leaves the perturbation domain at " + detail::format_point<D>(q));
  }
  const auto& rule = quadrature::gauss_legendre(nodes);
  Mat<D> avg = Mat<D>::Zero();  // ∫ s b(c + s x) ds
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double s = rule.nodes[k];
    const Vec<D> p = center + s * x;
    if (domain && !domain(p))
      throw DomainError("radial segment leaves the perturbation domain at " + detail::format_point<D>(p));
    avg += (rule.weights[k] * s) * per(p).matrix();
  }
  // a_i = x^j avg_ji
  return avg.transpose() * x;
}

template <int D>
struct Potential {
  OneForm<D> form;
  // Coefficient of σ: F̂(n) + gauge.
  std::function<double(const Vec<D>&)> theta_part;
  OneForm<D> perturbation;
  // Constant multiple of σ added to F̂; closed, so B is unchanged.
  double gauge = 0.0;

  Vec<D> operator()(const Vec<D>& q) const { return form(q); }
};

// A = (F̂(n) + gauge) σ + A_per. A_per is the scenario's closed-form
// primitive when present, the radial primitive otherwise.
template <int D>
Potential<D> assemble_potential(const MagneticField<D>& field, double gauge = 0.0, int nodes = 32) {
  if (!field.sigma.primitive)
    throw UnsupportedError("scenario has no primitive θ with dθ = σ; potential unavailable");

  Potential<D> pot;
  pot.gauge = gauge;
  const auto collar = field.collar;
  const auto profile = field.profile;
  const auto sigma = field.sigma.pullback;

  if (field.perturbation_primitive) {
    pot.perturbation = *field.perturbation_primitive;
  } else {
    const auto per = field.perturbation;
    const auto center = field.primitive_center;
    const auto domain = field.perturbation_domain;
    pot.perturbation.components = [per, center, domain, nodes](const Vec<D>& q) {
      return radial_primitive<D>(per, q, nodes, center, domain);
    };
  }
  if (!pot.perturbation.jacobian) {
    const auto a = pot.perturbation;
    pot.perturbation.jacobian = [a](const Vec<D>& q) { return one_form_jacobian_fd<D>(a, q, 1e-4); };
  }

  pot.theta_part = [collar, profile, gauge](const Vec<D>& q) {
    const double n = collar.distance(q);
    if (!(n > 0.0)) throw DomainError("potential evaluated on or beyond the boundary");
    return profile.F(n) + gauge;
  };

  const auto theta_part = pot.theta_part;
  const auto a = pot.perturbation;
  // σ may be singular inside the field-free core (an axis or a centre), where
  // its coefficients vanish identically; those terms are skipped.
  pot.form.components = [theta_part, sigma, a](const Vec<D>& q) -> Vec<D> {
    const double c = theta_part(q);
    return c == 0.0 ? a(q) : Vec<D>(c * sigma(q) + a(q));
  };
  pot.form.jacobian = [collar, profile, theta_part, sigma, a](const Vec<D>& q) -> Mat<D> {
    Mat<D> jac = a.jacobian(q);
    const double fn = profile.f(collar.distance(q));
    const double c = theta_part(q);
    if (fn != 0.0) jac += fn * collar.distance_gradient(q) * sigma(q).transpose();
    if (c != 0.0) jac += c * (sigma.jacobian ? sigma.jacobian(q) : one_form_jacobian_fd<D>(sigma, q, 1e-5));
    return jac;
  };
  return pot;
}

// |σ∞(x)| in the boundary metric; zero exactly on Z(σ∞).
template <int D>
double zero_locus_distance(const SigmaField<D>& sigma, const Vec<D - 1>& x) {
  return sigma.norm(x);
}

struct ForceStructure {
  double normal = 0.0;  // ‖Y∂_n + f|σ|S̄‖
  double sbar = 0.0;    // ‖YS̄ − f|σ|∂_n‖
  double kernel = 0.0;  // max ‖Yv‖ over a unit basis of ker B
  double scale = 0.0;   // f(n)|σ_q|
};

// Y∂_n = −f|σ|S̄, YS̄ = f|σ|∂_n and Y = 0 on ker B for a simple blow-up field.
template <int D>
ForceStructure force_structure_check(const MagneticField<D>& field, const Chart<D>& chart,
                                     const Metric<D>& metric, const Vec<D>& q) {
  if (!field.in_collar(q)) throw DomainError("force structure is defined on the collar only");
  if (field.perturbation(q).max_abs() > 0.0)
    throw UnsupportedError("force structure check needs a field without perturbation");

  const Mat<D> g = metric_at(chart, metric, q);
  const Eigen::LDLT<Mat<D>> ginv(g);
  const Vec<D> dn = field.collar.distance_gradient(q);
  const Vec<D> sigma = field.sigma.pullback(q);
  const double sigma_norm = std::sqrt(sigma.dot(ginv.solve(sigma)));
  if (!(sigma_norm > 1e-12)) throw DomainError("σ vanishes at q: S̄ is undefined");

  const double fn = field.profile.profile().f(field.collar.distance(q));
  const Mat<D> y = lorentz_map<D>(g, field.total(q));
  const Vec<D> normal = ginv.solve(dn);
  const Vec<D> sbar = ginv.solve(sigma) / sigma_norm;

  ForceStructure out;
  out.scale = fn * sigma_norm;
  out.normal = (y * normal + out.scale * sbar).norm();
  out.sbar = (y * sbar - out.scale * normal).norm();

  if constexpr (D > 2) {
    Eigen::Matrix<double, 2, D> constraints;
    constraints.row(0) = dn.transpose();
    constraints.row(1) = sigma.transpose();
    Eigen::FullPivLU<Eigen::Matrix<double, 2, D>> lu(constraints);
    const auto kernel = lu.kernel();
    for (int c = 0; c < kernel.cols(); ++c) {
      Vec<D> v = kernel.col(c);
      v /= std::sqrt(v.dot(g * v));
      out.kernel = std::max(out.kernel, (y * v).norm());
    }
  }
  return out;
}

}  // namespace magtrap

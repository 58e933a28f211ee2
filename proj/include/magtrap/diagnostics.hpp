#pragma once

// Along-trajectory diagnostics: the θ-components p_θ = p(∂_θ) and
// A_θ = A(∂_θ) of the canonical momentum and the potential, and an affine
// envelope fit |y| ≤ C0 + C1 t.

#include <optional>
#include <vector>

#include "magtrap/integrator.hpp"
#include "magtrap/scenarios.hpp"

namespace magtrap {

struct DiagnosticSample {
  double t = 0.0;
  double n = 0.0;
  std::optional<double> p_theta;
  std::optional<double> a_theta;
  // n ≥ ε: A_θ uses the continued profile F̂ rather than the collar formula.
  bool outside_collar = false;
};

template <int D>
DiagnosticSample diagnose(const Sample<D>& s, Formulation formulation, const System<D>& sys,
                          const std::function<std::optional<Vec<D>>(const Vec<D>&)>& theta_direction) {
  DiagnosticSample d;
  d.t = s.t;
  d.n = s.n;
  d.outside_collar = sys.collar && s.n >= sys.collar->width;
  if (!sys.potential || !theta_direction) return d;
  const auto dir = theta_direction(s.q);
  try {
    if (!dir) {
      // ∂_θ is undefined where σ vanishes; A_θ is still 0 when A itself is.
      if ((*sys.potential)(s.q).isZero(0.0)) d.a_theta = 0.0;
      return d;
    }
    const Vec<D> a = (*sys.potential)(s.q);
    const Vec<D> p = formulation == Formulation::hamiltonian
                         ? s.w
                         : Vec<D>(sys.particle.mass * (sys.metric.at(s.q) * s.v) + sys.particle.charge * a);
    d.a_theta = a.dot(*dir);
    d.p_theta = p.dot(*dir);
  } catch (const DomainError&) {
  }
  return d;
}

template <int D>
std::vector<DiagnosticSample> diagnostics_series(
    const Trajectory<D>& traj, const System<D>& sys,
    const std::function<std::optional<Vec<D>>(const Vec<D>&)>& theta_direction) {
  std::vector<DiagnosticSample> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples) out.push_back(diagnose(s, traj.formulation, sys, theta_direction));
  return out;
}

template <int D>
std::vector<DiagnosticSample> diagnostics_series(const Trajectory<D>& traj, const Scenario<D>& scn) {
  return diagnostics_series(traj, scn.system, scn.theta_direction);
}

struct LinearFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double violation = 0.0;  // max (|y| − C0 − C1 t)₊ / (1 + |y|)
};

// The slope is a least-squares fit of |y| on the first half of the series,
// clamped at zero, and C0 is the smallest intercept that bounds that half.
// The violation is measured over the whole series, so the second half tests
// the bound out of sample.
inline LinearFit linear_bound_fit(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw DomainError("linear_bound_fit: t and y differ in length");
  const std::size_t n = t.size();
  if (n < 10) throw DomainError("linear_bound_fit needs at least 10 samples");
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  if (!(*tmax > *tmin)) throw DomainError("linear_bound_fit: degenerate series (all t equal)");

  auto slope = [&](std::size_t count) {
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      mt += t[i];
      my += std::abs(y[i]);
    }
    mt /= count;
    my /= count;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      stt += (t[i] - mt) * (t[i] - mt);
      sty += (t[i] - mt) * (std::abs(y[i]) - my);
    }
    return stt > 0.0 ? std::optional<double>(sty / stt) : std::nullopt;
  };

  std::size_t half = (n + 1) / 2;
  std::optional<double> c1 = slope(half);
  if (!c1) {
    half = n;
    c1 = slope(n);
  }
  LinearFit fit;
  fit.c1 = std::max(0.0, *c1);
  for (std::size_t i = 0; i < half; ++i) fit.c0 = std::max(fit.c0, std::abs(y[i]) - fit.c1 * t[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const double excess = std::abs(y[i]) - fit.c0 - fit.c1 * t[i];
    if (excess > 0.0) fit.violation = std::max(fit.violation, excess / (1.0 + std::abs(y[i])));
  }
  return fit;
}

// Fit over the defined A_θ samples of a series; nullopt with fewer than 10.
inline std::optional<LinearFit> a_theta_fit(const std::vector<DiagnosticSample>& series) {
  std::vector<double> t, y;
  for (const auto& d : series)
    if (d.a_theta) {
      t.push_back(d.t);
      y.push_back(*d.a_theta);
    }
  if (t.size() < 10 || !(t.back() > t.front())) return std::nullopt;
  return linear_bound_fit(t, y);
}

}  // namespace magtrap

#pragma once

// Equations of motion for B-geodesics in two equivalent formulations:
//   Lorentz:      q̇ = v,  v̇^k = −Γ^k_ij v^i v^j + (e/m)(Y v)^k
//   Hamiltonian:  H_A = |p − eA|²_g / 2m with canonical (q, p)

#include <functional>
#include <limits>
#include <optional>

#include "magtrap/fields.hpp"

namespace magtrap {

struct ParticleParams {
  double mass = 1.0;
  double charge = 1.0;
};

enum class Formulation { lorentz, hamiltonian };

inline const char* to_string(Formulation f) {
  return f == Formulation::lorentz ? "lorentz" : "hamiltonian";
}

// Everything the integrator needs to advance one particle.
template <int D>
struct System {
  Chart<D> chart;
  Metric<D> metric;
  TwoForm<D> field;
  std::optional<Potential<D>> potential;
  std::optional<Collar<D>> collar;
  // |σ∞| at a boundary point, for escape events.
  std::function<double(const Vec<D - 1>&)> zero_locus_norm;
  ParticleParams particle;

  double boundary_distance(const Vec<D>& q) const {
    return collar ? collar->distance(q) : std::numeric_limits<double>::infinity();
  }

  const Potential<D>& require_potential() const {
    if (!potential) throw UnsupportedError("Hamiltonian formulation needs a magnetic potential");
    return *potential;
  }
};

template <int D>
struct ParticleState {
  double t = 0.0;
  Vec<D> q = Vec<D>::Zero();
  // velocity (Lorentz) or canonical momentum covector (Hamiltonian)
  Vec<D> w = Vec<D>::Zero();
  Formulation formulation = Formulation::lorentz;
};

template <int D>
struct PhaseDerivative {
  Vec<D> dq;
  Vec<D> dw;
};

template <int D>
PhaseDerivative<D> lorentz_rhs(const System<D>& sys, const Vec<D>& q, const Vec<D>& v) {
  if (!sys.chart.contains(q)) throw DomainError("Lorentz right-hand side evaluated outside the domain");
  const double k = sys.particle.charge / sys.particle.mass;
  PhaseDerivative<D> out;
  out.dq = v;
  if (sys.metric.euclidean) {
    out.dw = k * (sys.field(q).matrix() * v);
    return out;
  }
  const Mat<D> g = sys.metric.at(q);
  const Christoffel<D> gamma = christoffels_at(sys.chart, sys.metric, q);
  out.dw = k * lorentz_map<D>(g, sys.field(q)) * v;
  for (int c = 0; c < D; ++c) out.dw[c] -= v.dot(gamma[c] * v);
  return out;
}

// q̇ = g⁻¹π/m and ṗ_k = (1/m) π_l Γ^l_kj u^j + (e/m) u^j ∂_k A_j with
// π = p − eA, u = g⁻¹π.
template <int D>
PhaseDerivative<D> hamiltonian_rhs(const System<D>& sys, const Vec<D>& q, const Vec<D>& p) {
  if (!sys.chart.contains(q)) throw DomainError("Hamiltonian right-hand side evaluated outside the domain");
  const auto& pot = sys.require_potential();
  const double m = sys.particle.mass;
  const double e = sys.particle.charge;
  const Vec<D> pi = p - e * pot(q);
  const Mat<D> jac = pot.form.jacobian(q);
  PhaseDerivative<D> out;
  if (sys.metric.euclidean) {
    out.dq = pi / m;
    out.dw = (e / m) * (jac * pi);
    return out;
  }
  const Mat<D> g = sys.metric.at(q);
  const Vec<D> u = g.ldlt().solve(pi);
  const Christoffel<D> gamma = christoffels_at(sys.chart, sys.metric, q);
  out.dq = u / m;
  out.dw = (e / m) * (jac * u);
  for (int l = 0; l < D; ++l) out.dw += (pi[l] / m) * (gamma[l] * u);
  return out;
}

template <int D>
PhaseDerivative<D> phase_rhs(const System<D>& sys, Formulation f, const Vec<D>& q, const Vec<D>& w) {
  return f == Formulation::lorentz ? lorentz_rhs(sys, q, w) : hamiltonian_rhs(sys, q, w);
}

// p = m g v + e A(q)
template <int D>
Vec<D> to_momentum(const System<D>& sys, const Vec<D>& q, const Vec<D>& v) {
  const auto& pot = sys.require_potential();
  return sys.particle.mass * (sys.metric.at(q) * v) + sys.particle.charge * pot(q);
}

template <int D>
Vec<D> to_velocity(const System<D>& sys, const Vec<D>& q, const Vec<D>& p) {
  const auto& pot = sys.require_potential();
  const Vec<D> pi = p - sys.particle.charge * pot(q);
  return sys.metric.at(q).ldlt().solve(pi) / sys.particle.mass;
}

template <int D>
Vec<D> velocity_of(const System<D>& sys, const ParticleState<D>& s) {
  return s.formulation == Formulation::lorentz ? s.w : to_velocity(sys, s.q, s.w);
}

template <int D>
ParticleState<D> convert(const System<D>& sys, const ParticleState<D>& s, Formulation target) {
  if (s.formulation == target) return s;
  ParticleState<D> out = s;
  out.formulation = target;
  out.w = target == Formulation::hamiltonian ? to_momentum(sys, s.q, s.w) : to_velocity(sys, s.q, s.w);
  return out;
}

// m|v|²_g/2 (Lorentz) or H_A (Hamiltonian); equal after conversion.
template <int D>
double energy(const System<D>& sys, Formulation f, const Vec<D>& q, const Vec<D>& w) {
  const double m = sys.particle.mass;
  const Mat<D> g = sys.metric.at(q);
  if (f == Formulation::lorentz) return 0.5 * m * w.dot(g * w);
  const Vec<D> pi = w - sys.particle.charge * sys.require_potential()(q);
  return pi.dot(g.ldlt().solve(pi)) / (2.0 * m);
}

template <int D>
double energy(const System<D>& sys, const ParticleState<D>& s) {
  return energy(sys, s.formulation, s.q, s.w);
}

template <int D>
double speed(const System<D>& sys, const Vec<D>& q, const Vec<D>& v) {
  return std::sqrt(v.dot(sys.metric.at(q) * v));
}

}  // namespace magtrap

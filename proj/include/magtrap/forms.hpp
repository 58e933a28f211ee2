#pragma once

// Differential 1-forms and 2-forms as component fields, the Lorentz
// endomorphism, the 3d vector-field encoding, and numerical exterior
// derivatives used to check closedness and dA = B.

#include <algorithm>
#include <cmath>
#include <functional>

#include "magtrap/geometry.hpp"

namespace magtrap {

// Pointwise value of a 2-form b = Σ_{i<j} b_ij dq^i ∧ dq^j, stored as its strict
// upper triangle so that b_ji = −b_ij holds by construction.
template <int D>
class TwoFormValue {
 public:
  static constexpr int kSize = D * (D - 1) / 2;

  TwoFormValue() { upper_.fill(0.0); }

  static TwoFormValue from_matrix(const Mat<D>& m) {
    TwoFormValue b;
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) b.set(i, j, m(i, j));
    return b;
  }

  double operator()(int i, int j) const {
    if (i == j) return 0.0;
    return i < j ? upper_[index(i, j)] : -upper_[index(j, i)];
  }

  void set(int i, int j, double value) {
    if (i == j) return;
    if (i < j)
      upper_[index(i, j)] = value;
    else
      upper_[index(j, i)] = -value;
  }

  Mat<D> matrix() const {
    Mat<D> m = Mat<D>::Zero();
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) {
        m(i, j) = upper_[index(i, j)];
        m(j, i) = -m(i, j);
      }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : upper_) m = std::max(m, std::abs(v));
    return m;
  }

  TwoFormValue& operator+=(const TwoFormValue& o) {
    for (int k = 0; k < kSize; ++k) upper_[k] += o.upper_[k];
    return *this;
  }
  TwoFormValue& operator-=(const TwoFormValue& o) {
    for (int k = 0; k < kSize; ++k) upper_[k] -= o.upper_[k];
    return *this;
  }
  TwoFormValue& operator*=(double s) {
    for (double& v : upper_) v *= s;
    return *this;
  }
  friend TwoFormValue operator+(TwoFormValue a, const TwoFormValue& b) { return a += b; }
  friend TwoFormValue operator-(TwoFormValue a, const TwoFormValue& b) { return a -= b; }
  friend TwoFormValue operator*(double s, TwoFormValue a) { return a *= s; }

 private:
  static constexpr int index(int i, int j) {
    // Row-major strict upper triangle.
    return i * D - i * (i + 1) / 2 + (j - i - 1);
  }
  std::array<double, (kSize > 0 ? kSize : 1)> upper_{};
};

template <int D>
struct OneForm {
  std::function<Vec<D>(const Vec<D>&)> components;
  // jacobian(q)(k, j) = ∂_k ω_j; finite differences are used when empty.
  std::function<Mat<D>(const Vec<D>&)> jacobian;

  Vec<D> operator()(const Vec<D>& q) const { return components(q); }
};

template <int D>
struct TwoForm {
  std::function<TwoFormValue<D>(const Vec<D>&)> components;

  TwoFormValue<D> operator()(const Vec<D>& q) const { return components(q); }

  static TwoForm zero() {
    return TwoForm{[](const Vec<D>&) { return TwoFormValue<D>{}; }};
  }
  static TwoForm constant(const TwoFormValue<D>& b) {
    return TwoForm{[b](const Vec<D>&) { return b; }};
  }
};

// (a ∧ b)_ij = a_i b_j − a_j b_i
template <int D>
TwoFormValue<D> wedge(const Vec<D>& a, const Vec<D>& b) {
  TwoFormValue<D> w;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) w.set(i, j, a[i] * b[j] - a[j] * b[i]);
  return w;
}

// Y with B(u, v) = g(u, Y v), i.e. g Y = [b_ij].
template <int D>
Mat<D> lorentz_map(const Mat<D>& g, const TwoFormValue<D>& b) {
  Eigen::LLT<Mat<D>> llt(g);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return llt.solve(b.matrix());
}

template <int D>
Mat<D> lorentz_map(const Chart<D>& chart, const Metric<D>& metric, const TwoForm<D>& field,
                   const Vec<D>& q) {
  const Mat<D> g = metric_at(chart, metric, q);
  if (metric.euclidean) return field(q).matrix();
  return lorentz_map<D>(g, field(q));
}

// B(u, v) = ⟨u, v × B⃗⟩ for a Euclidean 3d chart.
inline TwoFormValue<3> encode_vector(const Vec<3>& bvec) {
  TwoFormValue<3> b;
  b.set(0, 1, bvec[2]);
  b.set(0, 2, -bvec[1]);
  b.set(1, 2, bvec[0]);
  return b;
}

inline Vec<3> decode_vector(const TwoFormValue<3>& b) { return Vec<3>(b(1, 2), -b(0, 2), b(0, 1)); }

template <int D>
TwoForm<D> encode_vector_field_3d(std::function<Vec<D>(const Vec<D>&)> field) {
  if constexpr (D != 3) {
    throw UnsupportedError("vector-field encoding of a 2-form requires a 3d chart");
  } else {
    return TwoForm<3>{[field = std::move(field)](const Vec<3>& q) { return encode_vector(field(q)); }};
  }
}

// ---------------------------------------------------------------------------
// Numerical exterior derivatives.

namespace detail {

template <int D>
void require_margin(const Chart<D>& chart, const Vec<D>& q, double h) {
  for (int i = 0; i < D; ++i) {
    const Vec<D> e = unit<D>(i) * h;
    if (!chart.contains(q + e) || !chart.contains(q - e))
      throw DomainError("finite-difference stencil of width " + std::to_string(h) +
                        " leaves the domain at " + format_point<D>(q));
  }
}

// partial[i] = ∂_i of the sampled quantity, central difference at step h.
template <int D, class F>
auto central_partials(const F& f, const Vec<D>& q, double h) {
  using Value = decltype(f(q));
  std::array<Value, D> partial;
  for (int i = 0; i < D; ++i) {
    const Vec<D> e = unit<D>(i) * h;
    partial[i] = (1.0 / (2.0 * h)) * (f(q + e) - f(q - e));
  }
  return partial;
}

template <int D, class F>
auto richardson_partials(const F& f, const Vec<D>& q, double h) {
  auto coarse = central_partials<D>(f, q, h);
  auto fine = central_partials<D>(f, q, 0.5 * h);
  for (int i = 0; i < D; ++i) fine[i] = (4.0 / 3.0) * fine[i] - (1.0 / 3.0) * coarse[i];
  return fine;
}

// Max-norm of the cyclic sum ∂_i b_jk − ∂_j b_ik + ∂_k b_ij over i<j<k.
template <int D>
double three_form_max(const std::array<TwoFormValue<D>, D>& db) {
  double r = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j)
      for (int k = j + 1; k < D; ++k)
        r = std::max(r, std::abs(db[i](j, k) - db[j](i, k) + db[k](i, j)));
  return r;
}

template <int D>
double partials_max(const std::array<TwoFormValue<D>, D>& db) {
  double r = 0.0;
  for (const auto& p : db) r = std::max(r, p.max_abs());
  return r;
}

}  // namespace detail

// dω for a 1-form, (dω)_ij = ∂_i ω_j − ∂_j ω_i, Richardson-extrapolated.
template <int D>
TwoFormValue<D> exterior_derivative(const OneForm<D>& w, const Chart<D>& chart, const Vec<D>& q,
                                    double h) {
  detail::require_margin(chart, q, h);
  const auto partial =
      detail::richardson_partials<D>([&](const Vec<D>& x) -> Vec<D> { return w(x); }, q, h);
  TwoFormValue<D> dw;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) dw.set(i, j, partial[i][j] - partial[j][i]);
  return dw;
}

// Max-norm of dB for a 2-form (zero identically when D = 2).
template <int D>
double exterior_derivative_residual(const TwoForm<D>& b, const Chart<D>& chart, const Vec<D>& q,
                                    double h) {
  detail::require_margin(chart, q, h);
  if constexpr (D < 3) {
    return 0.0;
  } else {
    const auto db = detail::richardson_partials<D>(b.components, q, h);
    return detail::three_form_max<D>(db);
  }
}

// Max-norm of dω − target for a 1-form.
template <int D>
double exterior_derivative_residual(const OneForm<D>& w, const TwoFormValue<D>& target,
                                    const Chart<D>& chart, const Vec<D>& q, double h) {
  return (exterior_derivative(w, chart, q, h) - target).max_abs();
}

struct ClosednessReport {
  double residual_coarse = 0.0;  // plain central differences at h
  double residual_fine = 0.0;    // plain central differences at h/2
  double residual = 0.0;         // Richardson-extrapolated
  double derivative_scale = 0.0; // largest |∂_i b_jk| seen
  double relative = 0.0;         // residual / (1 + derivative_scale)
  bool consistent = true;        // fine ≈ coarse/4, or both at round-off level
};

// Closedness check with step halving: a closed form shows O(h²) truncation
// residuals that drop by ~4 when h halves; a non-closed one does not.
template <int D>
ClosednessReport closedness(const TwoForm<D>& b, const Chart<D>& chart, const Vec<D>& q, double h) {
  ClosednessReport rep;
  detail::require_margin(chart, q, h);
  if constexpr (D >= 3) {
    const auto coarse = detail::central_partials<D>(b.components, q, h);
    const auto fine = detail::central_partials<D>(b.components, q, 0.5 * h);
    std::array<TwoFormValue<D>, D> extrap;
    for (int i = 0; i < D; ++i) extrap[i] = (4.0 / 3.0) * fine[i] - (1.0 / 3.0) * coarse[i];
    rep.residual_coarse = detail::three_form_max<D>(coarse);
    rep.residual_fine = detail::three_form_max<D>(fine);
    rep.residual = detail::three_form_max<D>(extrap);
    rep.derivative_scale = detail::partials_max<D>(fine);
    rep.relative = rep.residual / (1.0 + rep.derivative_scale);
    const double floor = 1e-9 * (1.0 + rep.derivative_scale);
    rep.consistent = rep.residual_coarse <= floor || rep.residual_fine <= 0.3 * rep.residual_coarse;
  }
  return rep;
}

// ∂_k ω_j by Richardson-extrapolated central differences.
template <int D>
Mat<D> one_form_jacobian_fd(const OneForm<D>& w, const Vec<D>& q, double h) {
  const auto partial =
      detail::richardson_partials<D>([&](const Vec<D>& x) -> Vec<D> { return w(x); }, q, h);
  Mat<D> jac;
  for (int k = 0; k < D; ++k) jac.row(k) = partial[k].transpose();
  return jac;
}

}  // namespace magtrap

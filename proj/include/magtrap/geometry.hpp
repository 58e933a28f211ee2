#pragma once

// Charts, Riemannian metrics, Christoffel symbols and collar (boundary-normal)
// coordinates for the built-in manifolds.
//
// Every scenario uses a single global chart. Periodic coordinates are kept
// unwrapped during integration and only normalized to [0, 2π) on output.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "magtrap/core.hpp"

namespace magtrap {

template <int D>
struct Chart {
  static_assert(D >= 2, "charts need at least two coordinates");
  static constexpr int Dim = D;

  std::array<std::string, D> names{};
  std::array<bool, D> periodic{};
  // True iff the point is in the open interior.
  std::function<bool(const Vec<D>&)> inside;

  bool contains(const Vec<D>& q) const {
    if (!q.allFinite()) return false;
    return !inside || inside(q);
  }

  Vec<D> normalized(const Vec<D>& q) const {
    Vec<D> out = q;
    for (int i = 0; i < D; ++i)
      if (periodic[i]) out[i] = wrap_angle(q[i]);
    return out;
  }
};

template <int D>
struct Metric {
  std::function<Mat<D>(const Vec<D>&)> at;
  // Analytic symbols when available; finite differences otherwise.
  std::function<Christoffel<D>(const Vec<D>&)> christoffels;
  double fd_step = 1e-5;
  // Constant identity metric: lets the dynamics skip connection terms.
  bool euclidean = false;
};

template <int D>
struct Collar {
  double width = 0.5;
  // n(q), the distance to the boundary.
  std::function<double(const Vec<D>&)> distance;
  // dn as a covector in chart components.
  std::function<Vec<D>(const Vec<D>&)> distance_gradient;
  // Boundary coordinates of the foot point; meaningful for n(q) < width.
  std::function<Vec<D - 1>(const Vec<D>&)> project;
  // Chart index equal to n in collar-adapted charts.
  std::optional<int> normal_index;
};

namespace detail {

template <int D>
std::string format_point(const Vec<D>& q) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < D; ++i) os << (i ? ", " : "") << q[i];
  os << ")";
  return os.str();
}

template <int D>
void require_inside(const Chart<D>& chart, const Vec<D>& q) {
  if (!chart.contains(q))
    throw DomainError("point " + format_point<D>(q) + " is outside the chart domain");
}

template <int D>
Vec<D> fd_steps(const Vec<D>& q, double base) {
  Vec<D> h;
  for (int i = 0; i < D; ++i) h[i] = base * std::max(1.0, std::abs(q[i]));
  return h;
}

template <int D>
bool stencil_inside(const Chart<D>& chart, const Vec<D>& q, const Vec<D>& h) {
  for (int i = 0; i < D; ++i) {
    const Vec<D> e = unit<D>(i) * h[i];
    if (!chart.contains(q + e) || !chart.contains(q - e)) return false;
  }
  return true;
}

}  // namespace detail

template <int D>
Mat<D> metric_at(const Chart<D>& chart, const Metric<D>& metric, const Vec<D>& q) {
  detail::require_inside(chart, q);
  return metric.at(q);
}

// Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij) with central differences.
template <int D>
Christoffel<D> christoffels_fd(const Metric<D>& metric, const Vec<D>& q, const Vec<D>& h) {
  std::array<Mat<D>, D> dg;  // dg[l] = ∂_l g
  for (int l = 0; l < D; ++l) {
    const Vec<D> e = unit<D>(l) * h[l];
    dg[l] = (metric.at(q + e) - metric.at(q - e)) / (2.0 * h[l]);
  }
  const Mat<D> ginv = metric.at(q).inverse();
  Christoffel<D> gamma;
  for (int k = 0; k < D; ++k) {
    gamma[k].setZero();
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double s = 0.0;
        for (int l = 0; l < D; ++l)
          s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = 0.5 * s;
      }
  }
  return gamma;
}

template <int D>
Christoffel<D> christoffels_at(const Chart<D>& chart, const Metric<D>& metric, const Vec<D>& q) {
  detail::require_inside(chart, q);
  if (metric.christoffels) return metric.christoffels(q);
  if (metric.euclidean) {
    Christoffel<D> zero;
    for (auto& m : zero) m.setZero();
    return zero;
  }
  Vec<D> h = detail::fd_steps<D>(q, metric.fd_step);
  if (!detail::stencil_inside(chart, q, h)) {
    h *= 0.5;
    if (!detail::stencil_inside(chart, q, h))
      throw DomainError("insufficient margin for finite-difference Christoffels at " +
                        detail::format_point<D>(q));
  }
  return christoffels_fd(metric, q, h);
}

template <int D>
double boundary_distance(const Collar<D>& collar, const Vec<D>& q) {
  return std::max(0.0, collar.distance(q));
}

// ---------------------------------------------------------------------------
// Built-in charts and metrics.

template <int D>
Metric<D> euclidean_metric() {
  Metric<D> m;
  m.at = [](const Vec<D>&) -> Mat<D> { return Mat<D>::Identity(); };
  m.christoffels = [](const Vec<D>&) {
    Christoffel<D> zero;
    for (auto& g : zero) g.setZero();
    return zero;
  };
  m.euclidean = true;
  return m;
}

// Plain polar coordinates (r, θ) on the punctured plane: g = diag(1, r²).
inline Chart<2> polar_chart() {
  Chart<2> c;
  c.names = {"r", "theta"};
  c.periodic = {false, true};
  c.inside = [](const Vec<2>& q) { return q[0] > 0.0; };
  return c;
}

inline Metric<2> polar_metric() {
  Metric<2> m;
  m.at = [](const Vec<2>& q) -> Mat<2> {
    Mat<2> g = Mat<2>::Zero();
    g(0, 0) = 1.0;
    g(1, 1) = q[0] * q[0];
    return g;
  };
  m.christoffels = [](const Vec<2>& q) {
    Christoffel<2> gamma;
    for (auto& g : gamma) g.setZero();
    const double r = q[0];
    gamma[0](1, 1) = -r;
    gamma[1](0, 1) = gamma[1](1, 0) = 1.0 / r;
    return gamma;
  };
  return m;
}

// Collar chart of the disc of radius R: (n, θ) with r = R − n.
inline Chart<2> disc_collar_chart(double radius) {
  Chart<2> c;
  c.names = {"n", "theta"};
  c.periodic = {false, true};
  c.inside = [radius](const Vec<2>& q) { return q[0] > 0.0 && q[0] < radius; };
  return c;
}

inline Metric<2> disc_collar_metric(double radius) {
  Metric<2> m;
  m.at = [radius](const Vec<2>& q) -> Mat<2> {
    const double r = radius - q[0];
    Mat<2> g = Mat<2>::Zero();
    g(0, 0) = 1.0;
    g(1, 1) = r * r;
    return g;
  };
  m.christoffels = [radius](const Vec<2>& q) {
    Christoffel<2> gamma;
    for (auto& g : gamma) g.setZero();
    const double r = radius - q[0];
    gamma[0](1, 1) = r;
    gamma[1](0, 1) = gamma[1](1, 0) = -1.0 / r;
    return gamma;
  };
  return m;
}

inline Vec<2> disc_collar_embedding(double radius, const Vec<2>& q) {
  const double r = radius - q[0];
  return Vec<2>(r * std::cos(q[1]), r * std::sin(q[1]));
}

// Torus of revolution with major radius R and minor radius r0, collar chart
// (n, θ, φ): θ toroidal, φ poloidal, z = x(θ, φ) + n N(θ, φ).
struct TorusShape {
  double major = 2.0;
  double minor = 1.0;

  Vec<3> embed(const Vec<3>& q) const {
    const double rho = minor - q[0];
    const double w = major + rho * std::cos(q[2]);
    return Vec<3>(w * std::cos(q[1]), w * std::sin(q[1]), rho * std::sin(q[2]));
  }

  Mat<3> metric(const Vec<3>& q) const {
    const double rho = minor - q[0];
    const double w = major + rho * std::cos(q[2]);
    Mat<3> g = Mat<3>::Zero();
    g(0, 0) = 1.0;
    g(1, 1) = w * w;
    g(2, 2) = rho * rho;
    return g;
  }

  Christoffel<3> christoffels(const Vec<3>& q) const {
    const double rho = minor - q[0];
    const double c = std::cos(q[2]);
    const double s = std::sin(q[2]);
    const double w = major + rho * c;
    Christoffel<3> gamma;
    for (auto& g : gamma) g.setZero();
    gamma[0](1, 1) = w * c;
    gamma[0](2, 2) = rho;
    gamma[1](0, 1) = gamma[1](1, 0) = -c / w;
    gamma[1](1, 2) = gamma[1](2, 1) = -rho * s / w;
    gamma[2](1, 1) = w * s / rho;
    gamma[2](0, 2) = gamma[2](2, 0) = -1.0 / rho;
    return gamma;
  }

  // Distance from a Cartesian point to the torus surface, positive inside.
  double distance(const Vec<3>& x) const {
    const double rxy = std::hypot(x[0], x[1]);
    return minor - std::hypot(rxy - major, x[2]);
  }
};

inline Chart<3> torus_collar_chart(const TorusShape& shape) {
  Chart<3> c;
  c.names = {"n", "theta", "phi"};
  c.periodic = {false, true, true};
  c.inside = [shape](const Vec<3>& q) { return q[0] > 0.0 && q[0] < shape.minor; };
  return c;
}

inline Metric<3> torus_collar_metric(const TorusShape& shape) {
  Metric<3> m;
  m.at = [shape](const Vec<3>& q) { return shape.metric(q); };
  m.christoffels = [shape](const Vec<3>& q) { return shape.christoffels(q); };
  return m;
}

// Spherical collar chart of the ball of radius R: (n, ϑ, φ), r = R − n,
// g = dn² + r²(dϑ² + sin²ϑ dφ²). Degenerate on the polar axis.
inline Chart<3> ball_collar_chart(double radius) {
  Chart<3> c;
  c.names = {"n", "polar", "azimuth"};
  c.periodic = {false, false, true};
  c.inside = [radius](const Vec<3>& q) {
    return q[0] > 0.0 && q[0] < radius && q[1] > 0.0 && q[1] < std::numbers::pi;
  };
  return c;
}

inline Metric<3> ball_collar_metric(double radius) {
  Metric<3> m;
  m.at = [radius](const Vec<3>& q) -> Mat<3> {
    const double r = radius - q[0];
    const double s = std::sin(q[1]);
    Mat<3> g = Mat<3>::Zero();
    g(0, 0) = 1.0;
    g(1, 1) = r * r;
    g(2, 2) = r * r * s * s;
    return g;
  };
  m.christoffels = [radius](const Vec<3>& q) {
    const double r = radius - q[0];
    const double s = std::sin(q[1]);
    const double c = std::cos(q[1]);
    Christoffel<3> gamma;
    for (auto& g : gamma) g.setZero();
    gamma[0](1, 1) = r;
    gamma[0](2, 2) = r * s * s;
    gamma[1](0, 1) = gamma[1](1, 0) = -1.0 / r;
    gamma[1](2, 2) = -s * c;
    gamma[2](0, 2) = gamma[2](2, 0) = -1.0 / r;
    gamma[2](1, 2) = gamma[2](2, 1) = c / s;
    return gamma;
  };
  return m;
}

inline Vec<3> ball_collar_embedding(double radius, const Vec<3>& q) {
  const double r = radius - q[0];
  return Vec<3>(r * std::sin(q[1]) * std::cos(q[2]), r * std::sin(q[1]) * std::sin(q[2]),
                r * std::cos(q[1]));
}

}  // namespace magtrap

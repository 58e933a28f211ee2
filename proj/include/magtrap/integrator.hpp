#pragma once

// Time integration of B-geodesics: adaptive Dormand–Prince 5(4) (default) or
// 8(5,3), both with dense output, or fixed-step implicit midpoint. Escape at
// n = n_min is localized by bisection on the dense output.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "magtrap/dop853_tableau.hpp"
#include "magtrap/dynamics.hpp"

namespace magtrap {

enum class Method { rk45, dop853, implicit_midpoint };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::rk45: return "rk45";
    case Method::dop853: return "dop853";
    case Method::implicit_midpoint: return "midpoint";
  }
  return "?";
}

struct IntegratorConfig {
  Method method = Method::rk45;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double initial_step = 1e-3;
  double fixed_step = 1e-3;  // implicit midpoint only
  double horizon = 10.0;
  double escape_threshold = 1e-4;  // n_min
  long max_steps = 50'000'000;
  double cadence = 0.01;  // output sampling interval
  // A step may shrink the boundary distance by at most this fraction of n.
  double boundary_clamp = 0.25;
  bool record_dense = false;

  void validate(double collar_width) const {
    auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!in_unit(rel_tol)) throw ConfigError("integrator.rel_tol must lie in (0, 1)");
    if (!in_unit(abs_tol)) throw ConfigError("integrator.abs_tol must lie in (0, 1)");
    if (!(max_step > 0.0)) throw ConfigError("integrator.max_step must be positive");
    if (!(horizon > 0.0)) throw ConfigError("integrator.horizon must be positive");
    if (!(cadence > 0.0)) throw ConfigError("output.cadence must be positive");
    if (!(fixed_step > 0.0)) throw ConfigError("integrator.fixed_step must be positive");
    if (!(escape_threshold > 0.0)) throw ConfigError("integrator.n_min must be positive");
    if (collar_width > 0.0 && !(escape_threshold < collar_width))
      throw ConfigError("integrator.n_min must be smaller than the collar width");
    if (max_steps <= 0) throw ConfigError("integrator.max_steps must be positive");
  }
};

enum class EventKind { escape, horizon_reached, step_failure };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::escape: return "escape";
    case EventKind::horizon_reached: return "horizon-reached";
    case EventKind::step_failure: return "step-failure";
  }
  return "?";
}

template <int D>
struct Event {
  EventKind kind = EventKind::horizon_reached;
  double t = 0.0;
  Vec<D> q = Vec<D>::Zero();
  std::string detail;
  // Escape only: n at the event, the linear extrapolation of the crossing
  // to n = 0, and the boundary foot point of that extrapolation.
  double n = 0.0;
  double boundary_time = 0.0;
  Vec<D> exit_position = Vec<D>::Zero();
  Vec<D - 1> boundary_point = Vec<D - 1>::Zero();
  double zero_locus_norm = std::numeric_limits<double>::quiet_NaN();
};

template <int D>
struct Sample {
  double t = 0.0;
  Vec<D> q = Vec<D>::Zero();
  Vec<D> w = Vec<D>::Zero();  // state second half (v or p)
  Vec<D> v = Vec<D>::Zero();  // velocity
  double n = 0.0;
  double energy = 0.0;
};

template <int D>
using Phase = Eigen::Matrix<double, 2 * D, 1>;

// y(t0 + θh) = c0 + θ(c1 + (1−θ)(c2 + θ(c3 + (1−θ)(c4 + ...))))
template <int D>
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  int terms = 0;
  std::array<Phase<D>, 8> c;

  Phase<D> operator()(double theta) const {
    Phase<D> acc = c[terms - 1];
    for (int k = terms - 2; k >= 1; --k) acc = c[k] + ((k % 2 == 1) ? 1.0 - theta : theta) * acc;
    return c[0] + theta * acc;
  }
};

template <int D>
struct Trajectory {
  Formulation formulation = Formulation::lorentz;
  std::vector<Sample<D>> samples;
  std::vector<Event<D>> events;
  std::vector<DenseSegment<D>> dense;  // filled when IntegratorConfig::record_dense

  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double initial_energy = 0.0;
  double initial_speed = 0.0;
  double energy_drift = 0.0;  // max |H − H0| / H0 over accepted steps
  double speed_drift = 0.0;   // max ||v| − |v0|| / |v0|
  double min_n = std::numeric_limits<double>::infinity();

  const Event<D>* escape() const {
    for (const auto& e : events)
      if (e.kind == EventKind::escape) return &e;
    return nullptr;
  }
  bool escaped() const { return escape() != nullptr; }
  const Event<D>* failure() const {
    for (const auto& e : events)
      if (e.kind == EventKind::step_failure) return &e;
    return nullptr;
  }
};

namespace detail {

namespace dp45 {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp45

template <int D>
class Evaluator {
 public:
  Evaluator(const System<D>& sys, Formulation f, long& evaluations)
      : sys_(sys), formulation_(f), evals_(evaluations) {}

  Phase<D> rhs(const Phase<D>& y) const {
    ++evals_;
    const auto d = phase_rhs<D>(sys_, formulation_, y.template head<D>(), y.template tail<D>());
    Phase<D> out;
    out << d.dq, d.dw;
    return out;
  }

  double n(const Phase<D>& y) const { return sys_.boundary_distance(y.template head<D>()); }

  Vec<D> velocity(const Phase<D>& y) const {
    if (formulation_ == Formulation::lorentz) return y.template tail<D>();
    return to_velocity<D>(sys_, y.template head<D>(), y.template tail<D>());
  }

  double energy(const Phase<D>& y) const {
    return magtrap::energy<D>(sys_, formulation_, y.template head<D>(), y.template tail<D>());
  }

 private:
  const System<D>& sys_;
  Formulation formulation_;
  long& evals_;
};

// Weighted RMS scale: periodic coordinates use 2π instead of their unwrapped
// magnitude so long runs do not loosen the angular tolerance.
template <int D>
Phase<D> error_scale(const Chart<D>& chart, const IntegratorConfig& cfg, const Phase<D>& y0, const Phase<D>& y1) {
  Phase<D> sc;
  for (int i = 0; i < 2 * D; ++i) {
    const double mag = (i < D && chart.periodic[i]) ? kTwoPi : std::max(std::abs(y0[i]), std::abs(y1[i]));
    sc[i] = cfg.abs_tol + cfg.rel_tol * mag;
  }
  return sc;
}

// One embedded pair. attempt() returns the scaled error norm of a trial step
// (throws DomainError if a stage leaves the domain); dense() builds the
// interpolant of the last accepted trial.
template <int D>
class Dp45Pair {
 public:
  static constexpr double kErrorExponent = -1.0 / 5.0;

  double attempt(const Evaluator<D>& ev, const Chart<D>& chart, const IntegratorConfig& cfg, const Phase<D>& y,
                 const Phase<D>& f0, double h) {
    using namespace dp45;
    y0_ = y;
    h_ = h;
    k_[0] = f0;
    k_[1] = ev.rhs(y + h * (a21 * k_[0]));
    k_[2] = ev.rhs(y + h * (a31 * k_[0] + a32 * k_[1]));
    k_[3] = ev.rhs(y + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]));
    k_[4] = ev.rhs(y + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]));
    k_[5] = ev.rhs(y + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]));
    y1_ = y + h * (a71 * k_[0] + a73 * k_[2] + a74 * k_[3] + a75 * k_[4] + a76 * k_[5]);
    k_[6] = ev.rhs(y1_);
    const Phase<D> err =
        h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] + e7 * k_[6]);
    const Phase<D> sc = error_scale(chart, cfg, y0_, y1_);
    return std::sqrt(err.cwiseQuotient(sc).squaredNorm() / (2 * D));
  }

  const Phase<D>& y1() const { return y1_; }
  const Phase<D>& f1() const { return k_[6]; }

  DenseSegment<D> dense(const Evaluator<D>&, double t0) const {
    using namespace dp45;
    DenseSegment<D> seg;
    seg.t0 = t0;
    seg.h = h_;
    seg.terms = 5;
    const Phase<D> ydiff = y1_ - y0_;
    const Phase<D> bspl = h_ * k_[0] - ydiff;
    seg.c[0] = y0_;
    seg.c[1] = ydiff;
    seg.c[2] = bspl;
    seg.c[3] = ydiff - h_ * k_[6] - bspl;
    seg.c[4] = h_ * (d1 * k_[0] + d3 * k_[2] + d4 * k_[3] + d5 * k_[4] + d6 * k_[5] + d7 * k_[6]);
    return seg;
  }

 private:
  std::array<Phase<D>, 7> k_;
  Phase<D> y0_, y1_;
  double h_ = 0.0;
};

template <int D>
class Dop853Pair {
 public:
  static constexpr double kErrorExponent = -1.0 / 8.0;

  double attempt(const Evaluator<D>& ev, const Chart<D>& chart, const IntegratorConfig& cfg, const Phase<D>& y,
                 const Phase<D>& f0, double h) {
    using namespace dop853;
    y0_ = y;
    h_ = h;
    k_[0] = f0;
    for (int s = 1; s < kStages; ++s) k_[s] = ev.rhs(y + h * combine(a[s], s));
    y1_ = y + h * combine(b, kStages);
    k_[kStages] = ev.rhs(y1_);
    Phase<D> err5 = Phase<D>::Zero(), err3 = Phase<D>::Zero();
    for (int j = 0; j <= kStages; ++j) {
      err5 += e5[j] * k_[j];
      err3 += e3[j] * k_[j];
    }
    const Phase<D> sc = error_scale(chart, cfg, y0_, y1_);
    const double n5 = err5.cwiseQuotient(sc).squaredNorm();
    const double n3 = err3.cwiseQuotient(sc).squaredNorm();
    if (n5 == 0.0 && n3 == 0.0) return 0.0;
    return std::abs(h) * n5 / std::sqrt((n5 + 0.01 * n3) * (2 * D));
  }

  const Phase<D>& y1() const { return y1_; }
  const Phase<D>& f1() const { return k_[dop853::kStages]; }

  // Three extra stages; falls back to cubic Hermite if one leaves the domain.
  DenseSegment<D> dense(const Evaluator<D>& ev, double t0) {
    using namespace dop853;
    DenseSegment<D> seg;
    seg.t0 = t0;
    seg.h = h_;
    const Phase<D> dy = y1_ - y0_;
    const Phase<D>& f_old = k_[0];
    const Phase<D>& f_new = k_[kStages];
    seg.c[0] = y0_;
    seg.c[1] = dy;
    seg.c[2] = h_ * f_old - dy;
    seg.c[3] = 2.0 * dy - h_ * (f_new + f_old);
    try {
      for (int s = kStages + 1; s < kExtended; ++s) k_[s] = ev.rhs(y0_ + h_ * combine(a[s], s));
    } catch (const DomainError&) {
      seg.c[3] = dy - h_ * f_new - seg.c[2];
      seg.terms = 4;
      return seg;
    }
    for (int r = 0; r < 4; ++r) seg.c[4 + r] = h_ * combine(d[r], kExtended);
    seg.terms = 8;
    return seg;
  }

 private:
  Phase<D> combine(const double* w, int count) const {
    Phase<D> acc = Phase<D>::Zero();
    for (int j = 0; j < count; ++j)
      if (w[j] != 0.0) acc += w[j] * k_[j];
    return acc;
  }

  std::array<Phase<D>, dop853::kExtended> k_;
  Phase<D> y0_, y1_;
  double h_ = 0.0;
};

}  // namespace detail

template <int D>
Trajectory<D> integrate(const System<D>& sys, const ParticleState<D>& initial, const IntegratorConfig& cfg) {
  cfg.validate(sys.collar ? sys.collar->width : 0.0);

  Trajectory<D> traj;
  traj.formulation = initial.formulation;
  detail::Evaluator<D> ev(sys, initial.formulation, traj.evaluations);

  if (!sys.chart.contains(initial.q)) throw DomainError("initial position is outside the domain");
  const double n_min = cfg.escape_threshold;
  if (!(sys.boundary_distance(initial.q) > n_min))
    throw DomainError("initial position must satisfy n(q0) > n_min");

  Phase<D> y;
  y << initial.q, initial.w;
  double t = initial.t;
  const double t_end = initial.t + cfg.horizon;

  traj.initial_energy = ev.energy(y);
  traj.initial_speed = speed<D>(sys, initial.q, ev.velocity(y));

  auto record_sample = [&](double ts, const Phase<D>& ys) {
    Sample<D> s;
    s.t = ts;
    s.q = ys.template head<D>();
    s.w = ys.template tail<D>();
    s.v = ev.velocity(ys);
    s.n = ev.n(ys);
    s.energy = ev.energy(ys);
    traj.min_n = std::min(traj.min_n, s.n);
    traj.samples.push_back(s);
  };

  auto monitor = [&](const Phase<D>& ys) {
    const double e = ev.energy(ys);
    const double sp = speed<D>(sys, ys.template head<D>(), ev.velocity(ys));
    if (traj.initial_energy > 0.0)
      traj.energy_drift = std::max(traj.energy_drift, std::abs(e - traj.initial_energy) / traj.initial_energy);
    if (traj.initial_speed > 0.0)
      traj.speed_drift = std::max(traj.speed_drift, std::abs(sp - traj.initial_speed) / traj.initial_speed);
    traj.min_n = std::min(traj.min_n, ev.n(ys));
  };

  auto fail = [&](const std::string& why) {
    Event<D> e;
    e.kind = EventKind::step_failure;
    e.t = t;
    e.q = y.template head<D>();
    e.detail = why;
    traj.events.push_back(e);
    if (traj.samples.empty() || traj.samples.back().t < t) record_sample(t, y);
  };

  // Emits cadence samples strictly inside (seg.t0, t_stop).
  double next_sample = initial.t + cfg.cadence;
  long sample_index = 1;
  auto emit_samples = [&](const DenseSegment<D>& seg, double t_stop) {
    while (next_sample < t_stop - 1e-12 * std::max(1.0, std::abs(t_stop))) {
      record_sample(next_sample, seg((next_sample - seg.t0) / seg.h));
      ++sample_index;
      next_sample = initial.t + static_cast<double>(sample_index) * cfg.cadence;
    }
  };
  auto needs_dense = [&](double t_stop) { return next_sample < t_stop - 1e-12 * std::max(1.0, std::abs(t_stop)); };

  // Bisect θ ∈ (0, 1] for the first n ≤ n_min on the step, then record the
  // escape and its linear extrapolation to n = 0.
  auto localize_escape = [&](const DenseSegment<D>& seg) {
    double lo = 0.0, hi = 1.0;
    Phase<D> yh = seg(hi);
    if (ev.n(yh) > n_min) yh = seg.c[0];  // defensive; the caller checked n(y1)
    for (int it = 0; it < 200; ++it) {
      if (ev.n(yh) >= n_min - 1e-9 || hi - lo < 1e-17) break;
      const double mid = 0.5 * (lo + hi);
      const Phase<D> ym = seg(mid);
      if (ev.n(ym) <= n_min) {
        hi = mid;
        yh = ym;
      } else {
        lo = mid;
      }
    }
    const double te = seg.t0 + hi * seg.h;
    emit_samples(seg, te);
    record_sample(te, yh);

    Event<D> e;
    e.kind = EventKind::escape;
    e.t = te;
    e.q = yh.template head<D>();
    e.n = ev.n(yh);
    const Vec<D> v = ev.velocity(yh);
    const double ndot = sys.collar->distance_gradient(e.q).dot(v);
    const double dt = ndot < 0.0 ? e.n / -ndot : 0.0;
    e.boundary_time = te + dt;
    e.exit_position = e.q + dt * v;
    e.boundary_point = sys.collar->project(e.exit_position);
    if (sys.zero_locus_norm) e.zero_locus_norm = sys.zero_locus_norm(e.boundary_point);
    traj.events.push_back(e);
    return yh;
  };

  record_sample(t, y);

  Phase<D> f0;
  try {
    f0 = ev.rhs(y);
  } catch (const DomainError& e) {
    fail(std::string("initial state not evaluable: ") + e.what());
    return traj;
  }

  detail::Dp45Pair<D> dp45;
  detail::Dop853Pair<D> dop853;
  const bool adaptive = cfg.method != Method::implicit_midpoint;
  const double error_exponent =
      cfg.method == Method::dop853 ? detail::Dop853Pair<D>::kErrorExponent : detail::Dp45Pair<D>::kErrorExponent;

  double h = adaptive ? std::min(cfg.initial_step, cfg.max_step) : cfg.fixed_step;
  bool rejected_last = false;
  long steps = 0;

  while (t < t_end) {
    if (++steps > cfg.max_steps) {
      fail("max steps exceeded");
      return traj;
    }
    const double remaining = t_end - t;
    double step = h;
    if (adaptive) {
      step = std::min(step, cfg.max_step);
      const double n0 = ev.n(y);
      if (std::isfinite(n0)) {
        const double ndot = sys.collar->distance_gradient(y.template head<D>()).dot(ev.velocity(y));
        if (ndot < 0.0) step = std::min(step, cfg.boundary_clamp * n0 / -ndot);
      }
    }
    bool last = false;
    if (step >= remaining) {
      step = remaining;
      last = true;
    }
    if (!(step > 1e-14 * std::max(1.0, std::abs(t)))) {
      fail("step size underflow");
      return traj;
    }

    Phase<D> y1, f1;
    DenseSegment<D> seg;
    bool have_dense = false;
    auto make_dense = [&]() -> const DenseSegment<D>& {
      if (!have_dense) {
        seg = cfg.method == Method::dop853 ? dop853.dense(ev, t) : dp45.dense(ev, t);
        have_dense = true;
      }
      return seg;
    };

    if (adaptive) {
      double err = 0.0;
      try {
        err = cfg.method == Method::dop853 ? dop853.attempt(ev, sys.chart, cfg, y, f0, step)
                                           : dp45.attempt(ev, sys.chart, cfg, y, f0, step);
      } catch (const DomainError&) {
        ++traj.rejected;
        rejected_last = true;
        h = 0.5 * step;
        continue;
      }
      if (!std::isfinite(err)) {
        ++traj.rejected;
        rejected_last = true;
        h = 0.5 * step;
        continue;
      }
      if (err > 1.0) {
        ++traj.rejected;
        rejected_last = true;
        h = step * std::max(0.2, 0.9 * std::pow(err, error_exponent));
        continue;
      }
      double grow = err > 0.0 ? std::min(10.0, 0.9 * std::pow(err, error_exponent)) : 10.0;
      if (rejected_last) grow = std::min(1.0, grow);
      rejected_last = false;
      h = step * std::max(grow, 0.2);
      y1 = cfg.method == Method::dop853 ? dop853.y1() : dp45.y1();
      f1 = cfg.method == Method::dop853 ? dop853.f1() : dp45.f1();
    } else {
      // Y = y + h f((y + Y)/2) by fixed-point iteration.
      Phase<D> yn = y + step * f0;
      bool converged = false;
      try {
        for (int it = 0; it < 100; ++it) {
          const Phase<D> next = y + step * ev.rhs(0.5 * (y + yn));
          const double delta = (next - yn).template lpNorm<Eigen::Infinity>();
          yn = next;
          if (delta <= 1e-15 * (1.0 + yn.template lpNorm<Eigen::Infinity>())) {
            converged = true;
            break;
          }
        }
        y1 = yn;
        f1 = ev.rhs(y1);
      } catch (const DomainError& e) {
        fail(std::string("implicit midpoint stage left the domain: ") + e.what());
        return traj;
      }
      if (!converged) {
        fail("implicit midpoint iteration did not converge; reduce integrator.fixed_step");
        return traj;
      }
      // Cubic Hermite in the nested form.
      const Phase<D> ydiff = y1 - y;
      seg.t0 = t;
      seg.h = step;
      seg.terms = 4;
      seg.c[0] = y;
      seg.c[1] = ydiff;
      seg.c[2] = step * f0 - ydiff;
      seg.c[3] = ydiff - step * f1 - seg.c[2];
      have_dense = true;
      h = cfg.fixed_step;
    }

    if (!y1.allFinite() || !f1.allFinite()) {
      fail("non-finite state");
      return traj;
    }

    ++traj.accepted;
    const double t_new = last ? t_end : t + step;

    if (ev.n(y1) <= n_min) {
      const DenseSegment<D>& s = make_dense();
      if (cfg.record_dense) traj.dense.push_back(s);
      monitor(localize_escape(s));
      return traj;
    }

    if (cfg.record_dense || needs_dense(t_new)) {
      const DenseSegment<D>& s = make_dense();
      if (cfg.record_dense) traj.dense.push_back(s);
      emit_samples(s, t_new);
    }
    monitor(y1);
    t = t_new;
    y = y1;
    f0 = f1;
  }

  record_sample(t, y);
  Event<D> done;
  done.kind = EventKind::horizon_reached;
  done.t = t;
  done.q = y.template head<D>();
  traj.events.push_back(done);
  return traj;
}

}  // namespace magtrap

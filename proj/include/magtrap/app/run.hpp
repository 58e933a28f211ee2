#pragma once

// Simulation runs behind the CLI: initial conditions, per-trajectory
// summaries, trace rows and ensembles.

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <mutex>
#include <thread>

#include "magtrap/app/config.hpp"
#include "magtrap/diagnostics.hpp"
#include "magtrap/rng.hpp"

namespace magtrap::app {

using Json = nlohmann::ordered_json;

inline std::vector<std::string> trace_columns(int d) {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= d; ++i) cols.push_back("q" + std::to_string(i));
  for (int i = 1; i <= d; ++i) cols.push_back("v" + std::to_string(i));
  for (const char* c : {"n", "H", "p_theta", "A_theta"}) cols.emplace_back(c);
  return cols;
}

// Shortest round-trip decimal form; empty for undefined values.
inline std::string format_number(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <int D>
Json vector_json(const Eigen::Matrix<double, D, 1>& v) {
  Json a = Json::array();
  for (int i = 0; i < D; ++i) a.push_back(number_or_null(v[i]));
  return a;
}

// ---------------------------------------------------------------------------
// Initial conditions.

template <int D>
ParticleState<D> explicit_state(const Scenario<D>& scn, Formulation f, const InitialState& st, std::size_t index) {
  ParticleState<D> s;
  s.formulation = f;
  for (int i = 0; i < D; ++i) s.q[i] = st.q[i];
  const std::string where = "initial[" + std::to_string(index) + "]";
  if (!scn.system.chart.contains(s.q))
    throw ConfigError("config field '" + where + ".q': point lies outside the domain");
  if (!st.p.empty()) {
    for (int i = 0; i < D; ++i) s.w[i] = st.p[i];
    return s;
  }
  for (int i = 0; i < D; ++i) s.w[i] = st.v[i];
  if (f == Formulation::hamiltonian) s.w = to_momentum(scn.system, s.q, s.w);
  return s;
}

template <int D>
std::vector<ParticleState<D>> sampled_states(const Scenario<D>& scn, Formulation f, const SamplerConfig& cfg) {
  Rng rng(cfg.seed);
  const double speed = std::sqrt(2.0 * cfg.energy / scn.system.particle.mass);
  std::vector<ParticleState<D>> out;
  out.reserve(cfg.count);
  for (int k = 0; k < cfg.count; ++k) {
    ParticleState<D> s;
    s.formulation = f;
    if (cfg.mode == "axial") {
      if constexpr (D == 3) {
        do {
          for (int i = 0; i < D; ++i) s.q[i] = rng.uniform(-cfg.radius, cfg.radius);
        } while (s.q.norm() > cfg.radius);
        if (!scn.system.chart.contains(s.q) || scn.system.boundary_distance(s.q) < cfg.min_n)
          throw ConfigError("config field 'sampler.radius': axial samples must lie in the interior with n >= min_n");
        Vec<3> dir(rng.uniform(-cfg.transverse, cfg.transverse), rng.uniform(-cfg.transverse, cfg.transverse),
                   rng.uniform() < 0.5 ? -1.0 : 1.0);
        const Mat<3> g = scn.system.metric.at(s.q);
        s.w = speed * dir / std::sqrt(dir.dot(g * dir));
      }
    } else {
      s.q = random_interior_point(scn, rng, cfg.min_n, cfg.max_n);
      if (cfg.mode == "equatorial") {
        long tries = 0;
        while (std::abs(s.q[D - 1]) > cfg.radius) {
          if (++tries > 10'000'000) throw ConfigError("config field 'sampler.radius': equatorial slab is empty");
          s.q = random_interior_point(scn, rng, cfg.min_n, cfg.max_n);
        }
      }
      s.w = speed * random_unit_velocity(scn.system, s.q, rng);
    }
    if (f == Formulation::hamiltonian) s.w = to_momentum(scn.system, s.q, s.w);
    out.push_back(s);
  }
  return out;
}

template <int D>
std::vector<ParticleState<D>> initial_states(const Scenario<D>& scn, const RunConfig& cfg) {
  std::vector<ParticleState<D>> out;
  for (std::size_t i = 0; i < cfg.initial.size(); ++i)
    out.push_back(explicit_state(scn, cfg.formulation, cfg.initial[i], i));
  if (cfg.sampler) {
    auto more = sampled_states(scn, cfg.formulation, *cfg.sampler);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// One trajectory.

template <int D>
struct RunResult {
  ParticleState<D> initial;
  Trajectory<D> trajectory;
  std::vector<DiagnosticSample> diagnostics;
  std::optional<LinearFit> fit;
};

template <int D>
RunResult<D> run_one(const Scenario<D>& scn, const ParticleState<D>& initial, const IntegratorConfig& cfg) {
  RunResult<D> r;
  r.initial = initial;
  r.trajectory = integrate(scn.system, initial, cfg);
  r.diagnostics = diagnostics_series(r.trajectory, scn);
  r.fit = a_theta_fit(r.diagnostics);
  return r;
}

template <int D>
Json summary_json(const RunResult<D>& r) {
  const auto& tr = r.trajectory;
  const Event<D>* esc = tr.escape();
  Json j;
  j["escaped"] = esc != nullptr;
  j["escape_time"] = esc ? number_or_null(esc->boundary_time) : Json(nullptr);
  j["escape_point"] = esc ? vector_json<D>(esc->exit_position) : Json(nullptr);
  j["zero_locus_norm_at_exit"] = esc ? number_or_null(esc->zero_locus_norm) : Json(nullptr);
  j["min_n"] = number_or_null(tr.min_n);
  j["energy_drift_rel"] = tr.energy_drift;
  j["speed_drift_rel"] = tr.speed_drift;
  if (r.fit)
    j["linear_fit"] = Json{{"C0", r.fit->c0}, {"C1", r.fit->c1}, {"violation", r.fit->violation}};
  else
    j["linear_fit"] = nullptr;
  if (esc) {
    j["escape_detection_time"] = esc->t;
    j["escape_detection_n"] = esc->n;
    j["escape_boundary_point"] = vector_json<D - 1>(esc->boundary_point);
  }
  j["initial"] = Json{{"q", vector_json<D>(r.initial.q)}, {"w", vector_json<D>(r.initial.w)}};
  j["final_time"] = tr.samples.empty() ? Json(nullptr) : Json(tr.samples.back().t);
  Json events = Json::array();
  for (const auto& e : tr.events) {
    Json ev{{"kind", to_string(e.kind)}, {"t", e.t}, {"q", vector_json<D>(e.q)}};
    if (!e.detail.empty()) ev["detail"] = e.detail;
    events.push_back(ev);
  }
  j["events"] = events;
  j["steps"] = Json{{"accepted", tr.accepted}, {"rejected", tr.rejected}, {"evaluations", tr.evaluations}};
  return j;
}

// Trace rows: t, q, v, n, H, p_theta, A_theta.
template <int D>
std::vector<std::array<double, 2 * D + 5>> trace_rows(const RunResult<D>& r) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::array<double, 2 * D + 5>> rows;
  rows.reserve(r.trajectory.samples.size());
  for (std::size_t k = 0; k < r.trajectory.samples.size(); ++k) {
    const auto& s = r.trajectory.samples[k];
    const auto& d = r.diagnostics[k];
    std::array<double, 2 * D + 5> row;
    row[0] = s.t;
    for (int i = 0; i < D; ++i) {
      row[1 + i] = s.q[i];
      row[1 + D + i] = s.v[i];
    }
    row[2 * D + 1] = s.n;
    row[2 * D + 2] = s.energy;
    row[2 * D + 3] = d.p_theta.value_or(nan);
    row[2 * D + 4] = d.a_theta.value_or(nan);
    rows.push_back(row);
  }
  return rows;
}

template <int D>
std::string trace_csv(const RunResult<D>& r) {
  std::string out;
  const auto cols = trace_columns(D);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\r\n";
  for (const auto& row : trace_rows(r)) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

// Two-column text for one channel; rows with an undefined value are skipped.
template <int D>
std::string plot_channel(const RunResult<D>& r, const std::string& channel) {
  const auto cols = trace_columns(D);
  const auto it = std::find(cols.begin(), cols.end(), channel);
  if (it == cols.end() || channel == "t") throw ConfigError("config field 'output.plot_channels': unknown channel '" + channel + "'");
  const std::size_t idx = static_cast<std::size_t>(it - cols.begin());
  std::string out = "# t " + channel + "\n";
  for (const auto& row : trace_rows(r)) {
    if (!std::isfinite(row[idx])) continue;
    out += format_number(row[0]) + " " + format_number(row[idx]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles: trajectories in parallel, results stored by index.

template <int D>
std::vector<RunResult<D>> run_ensemble(const Scenario<D>& scn, const std::vector<ParticleState<D>>& states,
                                       const IntegratorConfig& cfg, unsigned threads = 0) {
  std::vector<RunResult<D>> results(states.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, states.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= states.size()) return;
      try {
        results[i] = run_one(scn, states[i], cfg);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

template <int D>
Json ensemble_json(const RunConfig& cfg, const std::vector<RunResult<D>>& results) {
  Json trajectories = Json::array();
  std::size_t escaped = 0, failures = 0;
  double min_n = std::numeric_limits<double>::infinity();
  double max_violation = 0.0, max_drift = 0.0, max_speed = 0.0, max_zero = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Json j{{"index", i}};
    j.update(summary_json(results[i]));
    trajectories.push_back(j);
    const auto& tr = results[i].trajectory;
    if (const auto* e = tr.escape()) {
      ++escaped;
      if (std::isfinite(e->zero_locus_norm)) max_zero = std::max(max_zero, e->zero_locus_norm);
    }
    if (tr.failure()) ++failures;
    min_n = std::min(min_n, tr.min_n);
    if (results[i].fit) max_violation = std::max(max_violation, results[i].fit->violation);
    max_drift = std::max(max_drift, tr.energy_drift);
    max_speed = std::max(max_speed, tr.speed_drift);
  }
  Json agg;
  agg["count"] = results.size();
  agg["fraction_escaped"] = results.empty() ? 0.0 : static_cast<double>(escaped) / results.size();
  agg["min_n"] = number_or_null(min_n);
  agg["max_violation"] = max_violation;
  agg["max_energy_drift_rel"] = max_drift;
  agg["max_speed_drift_rel"] = max_speed;
  agg["max_zero_locus_norm_at_exit"] = escaped ? Json(max_zero) : Json(nullptr);
  agg["step_failures"] = failures;
  Json out;
  out["scenario"] = cfg.scenario.name;
  out["formulation"] = to_string(cfg.formulation);
  out["method"] = to_string(cfg.integrator.method);
  out["horizon"] = cfg.integrator.horizon;
  out["trajectories"] = trajectories;
  out["aggregate"] = agg;
  return out;
}

}  // namespace magtrap::app

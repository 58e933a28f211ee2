#pragma once

// Run configuration: a YAML file with a fixed key set. Unknown keys and
// malformed values raise ConfigError naming the dotted key path.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "magtrap/integrator.hpp"
#include "magtrap/scenarios.hpp"

namespace magtrap::app {

struct InitialState {
  std::vector<double> q;
  std::vector<double> v;  // velocity; converted when the formulation is Hamiltonian
  std::vector<double> p;  // canonical momentum, Hamiltonian only (alternative to v)
};

struct SamplerConfig {
  int count = 0;
  std::uint64_t seed = 1;
  double energy = 1.0;  // H = m|v|²/2
  double min_n = 0.25;
  double max_n = std::numeric_limits<double>::infinity();
  // isotropic: uniform position with n in [min_n, max_n], uniform direction.
  // axial: position uniform in a ball of the given radius about the origin,
  // direction (τ1, τ2, ±1) normalized with |τi| ≤ transverse. 3d only.
  // equatorial: isotropic, positions restricted to the slab |q3| ≤ radius. 3d only.
  std::string mode = "isotropic";
  double radius = 0.1;
  double transverse = 0.1;
};

struct OutputConfig {
  std::string trace = "trace.csv";
  std::string summary = "summary.json";
  // Two-column t/value files, one per channel, named <plot_prefix>_<channel>.dat.
  std::string plot_prefix = "plot";
  std::vector<std::string> plot_channels;
  double cadence = 0.01;
};

struct RunConfig {
  ScenarioSpec scenario;
  Formulation formulation = Formulation::lorentz;
  std::vector<InitialState> initial;
  std::optional<SamplerConfig> sampler;
  IntegratorConfig integrator;
  OutputConfig output;
};

namespace detail {

class Reader {
 public:
  Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where() + "must be a mapping");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) {
    seen_.insert(k);
    return node_.IsMap() && node_[k] && !node_[k].IsNull();
  }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    try {
      out = node_[k].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config field '" + key(k) + "': malformed value");
    }
  }

  double number(const std::string& k, double fallback) {
    double v = fallback;
    get(k, v);
    if (!std::isfinite(v) && !(std::isinf(v) && k == "max_n"))
      throw ConfigError("config field '" + key(k) + "': must be finite");
    return v;
  }

  std::vector<double> vector(const std::string& k) {
    std::vector<double> v;
    if (!has(k)) return v;
    if (!node_[k].IsSequence()) throw ConfigError("config field '" + key(k) + "': expected a list of numbers");
    get(k, v);
    for (double x : v)
      if (!std::isfinite(x)) throw ConfigError("config field '" + key(k) + "': entries must be finite");
    return v;
  }

  Reader child(const std::string& k) {
    seen_.insert(k);
    return Reader(node_.IsMap() ? node_[k] : YAML::Node(), key(k));
  }

  YAML::Node raw(const std::string& k) {
    seen_.insert(k);
    return node_.IsMap() ? node_[k] : YAML::Node();
  }

  // Call after all reads: rejects keys nobody asked for.
  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) throw ConfigError("config field '" + key(k) + "': unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : "config field '" + path_ + "': "; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <std::size_t N>
std::array<double, N> fixed_array(Reader& r, const std::string& k) {
  std::array<double, N> out{};
  const auto v = r.vector(k);
  if (v.size() > N) throw ConfigError("config field '" + r.key(k) + "': at most " + std::to_string(N) + " entries");
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline ScenarioSpec parse_scenario(Reader r) {
  ScenarioSpec s;
  r.get("name", s.name);
  if (!r.has("name")) throw ConfigError("config field 'scenario.name': required");
  try {
    scenario_dimension(s.name);
  } catch (const ConfigError& e) {
    std::string why = e.what();
    if (why.rfind("scenario.name: ", 0) == 0) why.erase(0, 15);
    throw ConfigError("config field 'scenario.name': " + why);
  }
  r.get("chart", s.chart);
  s.radius = r.number("radius", s.radius);
  s.collar_width = r.number("collar_width", s.collar_width);
  s.taper_width = r.number("taper_width", s.taper_width);
  s.major_radius = r.number("major_radius", s.major_radius);
  s.minor_radius = r.number("minor_radius", s.minor_radius);
  s.sigma_a = r.number("sigma_a", s.sigma_a);
  s.sigma_b = r.number("sigma_b", s.sigma_b);
  s.length = r.number("length", s.length);
  s.beta = r.number("beta", s.beta);
  s.field_strength = r.number("field_strength", s.field_strength);
  s.particle.mass = r.number("mass", s.particle.mass);
  s.particle.charge = r.number("charge", s.particle.charge);
  {
    Reader p = r.child("profile");
    p.get("kind", s.profile.kind);
    s.profile.coefficient = p.number("coefficient", s.profile.coefficient);
    s.profile.exponent = p.number("exponent", s.profile.exponent);
    s.profile.cutoff = p.number("cutoff", s.profile.cutoff);
    p.finish();
  }
  {
    Reader p = r.child("perturbation");
    p.get("kind", s.perturbation.kind);
    s.perturbation.constant = fixed_array<3>(p, "constant");
    s.perturbation.linear = fixed_array<3>(p, "linear");
    p.finish();
  }
  r.finish();
  return s;
}

inline IntegratorConfig parse_integrator(Reader r) {
  IntegratorConfig c;
  std::string method = "rk45";
  r.get("method", method);
  if (method == "rk45")
    c.method = Method::rk45;
  else if (method == "dop853")
    c.method = Method::dop853;
  else if (method == "midpoint")
    c.method = Method::implicit_midpoint;
  else
    throw ConfigError("config field 'integrator.method': unknown method '" + method +
                      "' (expected rk45, dop853 or midpoint)");
  c.rel_tol = r.number("rel_tol", c.rel_tol);
  c.abs_tol = r.number("abs_tol", c.abs_tol);
  c.max_step = r.number("max_step", c.max_step);
  c.initial_step = r.number("initial_step", c.initial_step);
  c.fixed_step = r.number("fixed_step", c.fixed_step);
  c.horizon = r.number("horizon", c.horizon);
  c.escape_threshold = r.number("n_min", c.escape_threshold);
  c.boundary_clamp = r.number("boundary_clamp", c.boundary_clamp);
  double max_steps = static_cast<double>(c.max_steps);
  max_steps = r.number("max_steps", max_steps);
  if (!(max_steps >= 1.0)) throw ConfigError("config field 'integrator.max_steps': must be >= 1");
  c.max_steps = static_cast<long>(max_steps);
  if (!(c.initial_step > 0.0)) throw ConfigError("config field 'integrator.initial_step': must be positive");
  if (!(c.boundary_clamp > 0.0 && c.boundary_clamp < 1.0))
    throw ConfigError("config field 'integrator.boundary_clamp': must lie in (0, 1)");
  r.finish();
  return c;
}

inline SamplerConfig parse_sampler(Reader r) {
  SamplerConfig s;
  double count = 0;
  count = r.number("count", count);
  if (!(count >= 0.0) || count != std::floor(count))
    throw ConfigError("config field 'sampler.count': must be a nonnegative integer");
  s.count = static_cast<int>(count);
  if (r.has("seed")) {
    try {
      s.seed = r.raw("seed").as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config field 'sampler.seed': expected a nonnegative integer");
    }
  }
  s.energy = r.number("energy", s.energy);
  s.min_n = r.number("min_n", s.min_n);
  s.max_n = r.number("max_n", s.max_n);
  r.get("mode", s.mode);
  s.radius = r.number("radius", s.radius);
  s.transverse = r.number("transverse", s.transverse);
  if (!(s.energy > 0.0)) throw ConfigError("config field 'sampler.energy': must be positive");
  if (!(s.min_n >= 0.0)) throw ConfigError("config field 'sampler.min_n': must be nonnegative");
  if (!(s.max_n > s.min_n)) throw ConfigError("config field 'sampler.max_n': must exceed sampler.min_n");
  if (s.mode != "isotropic" && s.mode != "axial" && s.mode != "equatorial")
    throw ConfigError("config field 'sampler.mode': unknown mode '" + s.mode +
                      "' (expected isotropic, axial or equatorial)");
  if (!(s.radius > 0.0)) throw ConfigError("config field 'sampler.radius': must be positive");
  if (!(s.transverse >= 0.0)) throw ConfigError("config field 'sampler.transverse': must be nonnegative");
  r.finish();
  return s;
}

inline OutputConfig parse_output(Reader r) {
  OutputConfig o;
  r.get("trace", o.trace);
  r.get("summary", o.summary);
  o.cadence = r.number("cadence", o.cadence);
  r.get("plot_prefix", o.plot_prefix);
  if (r.has("plot_channels")) {
    if (!r.raw("plot_channels").IsSequence())
      throw ConfigError("config field 'output.plot_channels': expected a list of channel names");
    r.get("plot_channels", o.plot_channels);
  }
  if (!(o.cadence > 0.0)) throw ConfigError("config field 'output.cadence': must be positive");
  r.finish();
  return o;
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw ConfigError("config: top level must be a mapping");
  detail::Reader r(root, "");
  RunConfig cfg;
  if (!r.has("scenario")) throw ConfigError("config field 'scenario': required");
  cfg.scenario = detail::parse_scenario(r.child("scenario"));
  std::string formulation = "lorentz";
  r.get("formulation", formulation);
  if (formulation == "lorentz")
    cfg.formulation = Formulation::lorentz;
  else if (formulation == "hamiltonian")
    cfg.formulation = Formulation::hamiltonian;
  else
    throw ConfigError("config field 'formulation': unknown formulation '" + formulation +
                      "' (expected lorentz or hamiltonian)");

  const int d = scenario_dimension(cfg.scenario.name);
  YAML::Node init = r.raw("initial");
  if (init && !init.IsNull()) {
    if (!init.IsSequence()) throw ConfigError("config field 'initial': expected a list of states");
    for (std::size_t i = 0; i < init.size(); ++i) {
      detail::Reader s(init[i], "initial[" + std::to_string(i) + "]");
      InitialState st;
      st.q = s.vector("q");
      st.v = s.vector("v");
      st.p = s.vector("p");
      s.finish();
      if (static_cast<int>(st.q.size()) != d)
        throw ConfigError("config field '" + s.key("q") + "': expected " + std::to_string(d) + " coordinates");
      if (st.p.empty() == st.v.empty())
        throw ConfigError("config field '" + s.key("v") + "': give exactly one of v or p");
      const auto& w = st.p.empty() ? st.v : st.p;
      if (static_cast<int>(w.size()) != d)
        throw ConfigError("config field '" + s.key(st.p.empty() ? "v" : "p") + "': expected " +
                          std::to_string(d) + " components");
      if (!st.p.empty() && cfg.formulation != Formulation::hamiltonian)
        throw ConfigError("config field '" + s.key("p") + "': momenta need formulation = hamiltonian");
      cfg.initial.push_back(st);
    }
  }
  if (r.has("sampler")) cfg.sampler = detail::parse_sampler(r.child("sampler"));
  if (cfg.sampler && cfg.sampler->mode != "isotropic" && d != 3)
    throw ConfigError("config field 'sampler.mode': " + cfg.sampler->mode + " sampling needs a 3d scenario");
  cfg.integrator = detail::parse_integrator(r.child("integrator"));
  cfg.output = detail::parse_output(r.child("output"));
  for (const auto& c : cfg.output.plot_channels) {
    bool known = c == "n" || c == "H" || c == "p_theta" || c == "A_theta";
    for (int i = 1; i <= d; ++i) known = known || c == "q" + std::to_string(i) || c == "v" + std::to_string(i);
    if (!known) throw ConfigError("config field 'output.plot_channels': unknown channel '" + c + "'");
  }
  cfg.integrator.cadence = cfg.output.cadence;
  r.finish();
  if (cfg.initial.empty() && !(cfg.sampler && cfg.sampler->count > 0))
    throw ConfigError("config field 'initial': no initial states (give initial or sampler.count > 0)");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config: YAML syntax error in '" + path + "': " + e.what());
  }
  return parse_config(root);
}

}  // namespace magtrap::app

// magtrap: simulate, ensemble and verify front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "magtrap/app/verify.hpp"

namespace fs = std::filesystem;
using namespace magtrap;
using namespace magtrap::app;

namespace {

struct Options {
  std::string config;
  std::string suite;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> cadence;
  unsigned threads = 0;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

RunConfig load(const Options& opt) {
  RunConfig cfg = load_config(opt.config);
  if (opt.seed) {
    if (!cfg.sampler) throw ConfigError("--seed: the config has no sampler section to seed");
    cfg.sampler->seed = *opt.seed;
  }
  if (opt.cadence) {
    if (!(*opt.cadence > 0.0)) throw ConfigError("--cadence: must be positive");
    cfg.output.cadence = *opt.cadence;
    cfg.integrator.cadence = *opt.cadence;
  }
  return cfg;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void report_outcome(const Json& summary) {
  std::cout << "escaped: " << (summary["escaped"].get<bool>() ? "yes" : "no");
  if (summary["escaped"].get<bool>()) std::cout << " at t = " << summary["escape_time"].dump();
  std::cout << ", min_n = " << summary["min_n"].dump() << ", energy drift = " << summary["energy_drift_rel"].dump()
            << "\n";
  for (const auto& e : summary["events"])
    if (e["kind"] == "step-failure") std::cout << "step failure at t = " << e["t"].dump() << ": " << e.value("detail", "") << "\n";
}

int simulate(const Options& opt) {
  const RunConfig cfg = load(opt);
  const AnyScenario any = build_scenario(cfg.scenario);
  return std::visit(
      [&](const auto& scn) {
        constexpr int D = std::decay_t<decltype(scn)>::Dim;
        RunConfig one = cfg;
        if (one.initial.empty() && one.sampler) one.sampler->count = 1;
        const auto states = initial_states(scn, one);
        cfg.integrator.validate(scn.collar_width());
        const RunResult<D> r = run_one(scn, states.front(), cfg.integrator);
        Json summary;
        summary["scenario"] = cfg.scenario.name;
        summary["formulation"] = to_string(cfg.formulation);
        summary["method"] = to_string(cfg.integrator.method);
        summary.update(summary_json(r));
        const fs::path dir(opt.out_dir);
        write_file(dir / cfg.output.trace, trace_csv(r));
        write_file(dir / cfg.output.summary, dump(summary));
        for (const auto& ch : cfg.output.plot_channels)
          write_file(dir / (cfg.output.plot_prefix + "_" + ch + ".dat"), plot_channel(r, ch));
        report_outcome(summary);
        std::cout << "wrote " << (dir / cfg.output.summary).string() << " and " << (dir / cfg.output.trace).string()
                  << "\n";
        return 0;
      },
      any);
}

int ensemble(const Options& opt) {
  const RunConfig cfg = load(opt);
  if (!cfg.sampler && cfg.initial.size() < 2)
    throw ConfigError("config field 'sampler': ensemble needs a sampler or several initial states");
  const AnyScenario any = build_scenario(cfg.scenario);
  return std::visit(
      [&](const auto& scn) {
        const auto states = initial_states(scn, cfg);
        cfg.integrator.validate(scn.collar_width());
        const auto results = run_ensemble(scn, states, cfg.integrator, opt.threads);
        const Json j = ensemble_json(cfg, results);
        const fs::path dir(opt.out_dir);
        write_file(dir / cfg.output.summary, dump(j));
        const auto& agg = j["aggregate"];
        std::cout << agg["count"].dump() << " trajectories, fraction escaped = " << agg["fraction_escaped"].dump()
                  << ", min_n = " << agg["min_n"].dump() << ", max violation = " << agg["max_violation"].dump()
                  << ", step failures = " << agg["step_failures"].dump() << "\n";
        std::cout << "wrote " << (dir / cfg.output.summary).string() << "\n";
        return 0;
      },
      any);
}

int verify(const Options& opt) {
  const Report rep = run_verify(opt.suite);
  rep.print(std::cout);
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charged-particle trajectories in boundary blow-up magnetic fields"};
  app.require_subcommand(1);
  Options opt;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("config", opt.config, "YAML run configuration")->required();
    sub->add_option("--out-dir", opt.out_dir, "directory for output files");
    sub->add_option("--seed", opt.seed, "sampler seed (overrides the config)");
    sub->add_option("--cadence", opt.cadence, "output sample interval (overrides the config)");
  };
  CLI::App* sim = app.add_subcommand("simulate", "integrate one trajectory; write trace CSV and summary JSON");
  add_run_flags(sim);
  CLI::App* ens = app.add_subcommand("ensemble", "integrate sampled trajectories in parallel; write summary JSON");
  add_run_flags(ens);
  ens->add_option("--threads", opt.threads, "worker threads (0 = hardware concurrency)");
  CLI::App* ver = app.add_subcommand("verify", "run invariant checks");
  ver->add_option("suite", opt.suite, "geometry, forms, fields, dynamics, scenarios or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return simulate(opt);
    if (ens->parsed()) return ensemble(opt);
    return verify(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

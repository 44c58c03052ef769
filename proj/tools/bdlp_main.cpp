#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "bdlp/config.hpp"
#include "bdlp/errors.hpp"
#include "bdlp/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCheck = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::string out = ".";
  bool quiet = false;
};

void note(const Options& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << '\n';
}

int dispatch(const std::string& command, const Options& o) {
  bdlp::ExperimentConfig cfg = bdlp::load_config(o.config);
  if (o.seed) cfg.simulate.seed = *o.seed;
  if (o.replicas) cfg.simulate.replicas = *o.replicas;
  bdlp::validate(cfg);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "resolved_config.toml");
    os << bdlp::output_stamp(cfg) << "\n" << bdlp::resolved_config(cfg);
  }

  if (command == "simulate") {
    auto out = bdlp::run_simulate(cfg);
    bdlp::write_simulate(cfg, out, dir);
    for (std::size_t r = 0; r < out.runs.size(); ++r)
      if (out.runs[r].termination == bdlp::Termination::Truncated)
        note(o, "replica " + std::to_string(r) + " truncated at max_points");
    note(o, "simulate: " + std::to_string(out.runs.size()) + " replicas written to " + dir.string());
    return 0;
  }
  if (command == "hierarchy") {
    auto traj = bdlp::run_hierarchy(cfg);
    bdlp::write_hierarchy(cfg, traj, dir);
    for (const auto& w : traj.warnings) note(o, "warning: " + w);
    return 0;
  }
  if (command == "stability") {
    auto out = bdlp::run_stability(cfg);
    std::ofstream(dir / "certificate.json") << bdlp::certificate_json(cfg, out);
    if (!out.certified) {
      note(o, "stability: no proven certificate applies to this kernel pair");
      return 0;
    }
    if (out.search.min_u < -bdlp::kViolationTolerance) {
      note(o, "stability: brute-force search found a violating configuration");
      return kExitCheck;
    }
    note(o, "stability: certificate survived " + std::to_string(out.search.trials) + " trials");
    return 0;
  }
  if (command == "bounds") {
    std::cout << bdlp::bounds_report(cfg);
    return 0;
  }
  if (command == "compare") {
    auto out = bdlp::run_compare(cfg);
    bdlp::write_compare(cfg, out, dir);
    note(o, "compare: " + out.envelope.description);
    if (!out.ledger.all_pass()) {
      note(o, "compare: at least one envelope check failed (see ledger.csv)");
      return kExitCheck;
    }
    return 0;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial birth-death-competition toolkit"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  for (const char* name : {"simulate", "hierarchy", "stability", "bounds", "compare"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides [simulate] seed)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--replicas", replicas, "Replica count (overrides [simulate] replicas)");
    sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--replicas")) o.replicas = replicas;

  try {
    return dispatch(sub->get_name(), o);
  } catch (const bdlp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

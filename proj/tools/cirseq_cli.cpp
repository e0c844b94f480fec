// Command-line front end for the truncated sequential CIR estimators.
//
// Exit codes: 0 complete or PASS, 1 invalid input, 2 a bound check failed.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cirseq/config.hpp"
#include "cirseq/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<double> step;
  std::optional<unsigned> threads;
  std::string out_json;
  std::string out_csv;
  bool verbose_stages = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--replicates", f.replicates, "number of Monte Carlo replicates");
  cmd->add_option("--step", f.step, "simulation grid step");
  cmd->add_option("--threads", f.threads, "worker threads (results do not depend on it)");
  cmd->add_option("--out-json", f.out_json, "write the JSON report here");
  cmd->add_option("--out-csv", f.out_csv, "write per-replicate rows here");
  cmd->add_flag("--verbose-stages", f.verbose_stages, "also write 2-D stage rows");
  cmd->add_option("--set", f.sets, "override a config key, e.g. --set T=200");
}

cirseq::ExperimentConfig load(const CommonFlags& f, const std::optional<std::string>& procedure) {
  std::vector<cirseq::KeyValues> layers;
  if (!f.config_path.empty()) layers.push_back(cirseq::read_key_values(f.config_path));
  cirseq::KeyValues cli;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw cirseq::ConfigError({"--set expects key=value, got '" + s + "'"});
    cli[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (procedure) cli["procedure"] = *procedure;
  if (f.seed) cli["seed"] = std::to_string(*f.seed);
  if (f.replicates) cli["replicates"] = std::to_string(*f.replicates);
  if (f.step) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *f.step);
    cli["step"] = buf;
  }
  if (f.threads) cli["threads"] = std::to_string(*f.threads);
  if (!f.out_json.empty()) cli["out_json"] = f.out_json;
  if (!f.out_csv.empty()) cli["out_csv"] = f.out_csv;
  if (f.verbose_stages) cli["verbose_stages"] = "true";
  layers.push_back(cli);
  return cirseq::make_config(layers);
}

int finish(const cirseq::ExperimentConfig& cfg, const cirseq::Report& report,
           std::chrono::steady_clock::time_point start) {
  cirseq::write_outputs(cfg, report);
  if (cfg.out_json.empty()) std::cout << report.json.dump(2) << '\n';
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "verdict: " << report.json.value("verdict", std::string("complete"))
            << "  wall-clock " << secs << " s\n";
  return report.has_verdict && !report.pass ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated sequential estimators for CIR drift parameters"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string procedure;  // empty: keep the config file value (default b)

  auto* sim = app.add_subcommand("simulate", "simulate paths and report ergodic averages");
  auto* est = app.add_subcommand("estimate", "run a procedure and check its accuracy bound");
  auto* ver = app.add_subcommand("verify-bounds", "concentration and stopping-time tail checks");
  auto* cmp = app.add_subcommand("compare", "sequential rule against the fixed-horizon MLE");
  auto* dump = app.add_subcommand("dump-constants", "print every bound constant as JSON");
  for (auto* cmd : {sim, est, ver, cmp, dump}) add_common(cmd, flags);
  est->add_option("--procedure", procedure, "b, a, 2d, mle-b or mle-a")
      ->check(CLI::IsMember({"b", "a", "2d", "mle-b", "mle-a"}));
  for (auto* cmd : {ver, cmp, dump}) {
    cmd->add_option("--procedure", procedure, "b, a, 2d, mle-b or mle-a")
        ->check(CLI::IsMember({"b", "a", "2d", "mle-b", "mle-a"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*sim) {
      const auto cfg = load(flags, std::nullopt);
      return finish(cfg, cirseq::simulate(cfg), start);
    }
    const auto cfg =
        load(flags, procedure.empty() ? std::nullopt : std::optional<std::string>(procedure));
    if (*est) return finish(cfg, cirseq::run_experiment(cfg), start);
    if (*ver) return finish(cfg, cirseq::verify_bounds(cfg), start);
    if (*cmp) return finish(cfg, cirseq::compare_sequential_vs_fixed(cfg), start);
    if (*dump) {
      cirseq::Report rep;
      rep.json = cirseq::dump_constants(cfg);
      return finish(cfg, rep, start);
    }
  } catch (const cirseq::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "outside the bound's regime: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

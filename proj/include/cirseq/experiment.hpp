#pragma once

#include <string>

#include "json.hpp"

#include "cirseq/bound_constants.hpp"
#include "cirseq/config.hpp"
#include "cirseq/harness.hpp"

namespace cirseq {

using Json = nlohmann::ordered_json;

/// Threshold, clamp level and schedule derived from a config.
struct ResolvedProcedure {
  Procedure bound = Procedure::B;
  ParamRegion region;
  double r = 1.0;
  double H = 0.0;
  bool H_from_solver = true;
  /// The solver's H* fell below the admissible minimum (1 for 2-D) and was raised.
  bool H_raised_to_minimum = false;
  ThresholdSolution solution;
  double u_star = 0.0;
  KappaSchedule schedule;
  RunSpec spec;
};

ResolvedProcedure resolve(const ExperimentConfig& config);

/// Every constant used by the bounds; depends on the config but never on the seed.
Json dump_constants(const ExperimentConfig& config);

struct Report {
  Json json;
  std::string csv;         ///< per-replicate rows
  std::string stages_csv;  ///< 2-D stage rows when verbose_stages is set
  bool has_verdict = false;
  bool pass = true;
};

/// Simulates config.replicates replicates of the configured procedure,
/// evaluates the matching bound at (H, T, m) and writes no files.
Report run_experiment(const ExperimentConfig& config);

/// Truncated sequential rule against the fixed-horizon MLE on the same streams.
Report compare_sequential_vs_fixed(const ExperimentConfig& config);

/// Concentration checks (D for m = 1..m, Delta for m = 1), the stopping-time
/// tail of the configured procedure and Poisson-equation residuals.
Report verify_bounds(const ExperimentConfig& config);

/// Ergodic averages int X / T and int X^{-1} / T; csv holds replicate 0's path.
Report simulate(const ExperimentConfig& config);

/// Writes report files named in the config (if any).
void write_outputs(const ExperimentConfig& config, const Report& report);

Json to_json(const ExperimentConfig& config);

}  // namespace cirseq

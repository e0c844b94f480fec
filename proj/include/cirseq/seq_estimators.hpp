#pragma once

#include <optional>

#include "cirseq/cir_process.hpp"

namespace cirseq {

/// One instance of a truncated sequential rule.
struct ProcedureConfig {
  double H = 1.0;  ///< threshold on the observed information
  double T = 1.0;  ///< truncation horizon
  int m = 2;       ///< moment order used by the accuracy bound
  double r = 1.0;  ///< clamp level of min(1/x, r); a-case and 2-D only

  /// Throws std::invalid_argument for H <= 0, T <= 0, m < 2 or r < 1.
  void validate() const;
};

/// Where a stopping rule fired and what it produced.
struct SequentialResult {
  double tau = 0.0;
  double estimate = 0.0;
  GridPoint at;
};

struct EstimateOutcome {
  double stop_time = 0.0;
  double estimate = 0.0;
  bool truncated = false;
  /// Untruncated tau_H when it was seen on the simulated path; empty means
  /// the rule had not fired by the end of the path (censored).
  std::optional<double> raw_stop;
};

/// (a T - X_T + x0) / int_0^T X ds.
double mle_b_fixed_horizon(const PathRecord& path, double a, double upto_time);

/// Stops when int X ds first reaches H. nullopt when the path ends first.
std::optional<SequentialResult> sequential_estimate_b(const PathRecord& path, double a, double H);

/// Returns estimate 0 with stop_time T when tau_H > T.
EstimateOutcome truncated_estimate_b(const PathRecord& path, double a,
                                     const ProcedureConfig& config);

/// (b T + int_0^T X^{-1} dX) / int_0^T X^{-1} ds.
double mle_a_fixed_horizon(const PathRecord& path, double b, double sigma, double upto_time);

/// Stops when int X^{-1} ds first reaches H.
std::optional<SequentialResult> sequential_estimate_a(const PathRecord& path, double b,
                                                      double sigma, double H);

EstimateOutcome truncated_estimate_a(const PathRecord& path, double b, double sigma,
                                     const ProcedureConfig& config);

}  // namespace cirseq

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cirseq/cir_process.hpp"
#include "cirseq/linalg2.hpp"
#include "cirseq/seq_estimators.hpp"

namespace cirseq {

/// kappa_n = H for n <= n_star and n^varpi afterwards.
struct KappaSchedule {
  double H = 1.0;
  double varpi = 1.5;
  double n_star = 1.0;  ///< 2 u_* H

  static KappaSchedule make(double H, double u_star, double varpi = 1.5) {
    return {H, varpi, 2.0 * u_star * H};
  }

  /// Last index of the constant block, floor(n_star) and at least 1.
  std::size_t flat_count() const;
  double kappa(std::size_t n) const;
  double delta_star() const { return 0.5 * (2.0 - varpi); }
  /// Throws unless H >= 1, 1 < varpi < 2 and n_star > 0.
  void validate() const;
};

/// One stage or, when several consecutive stages share kappa_n and hence the
/// same stopping time, the whole block of them.
struct StageRecord {
  std::size_t index = 1;         ///< first stage index n in the block
  std::size_t multiplicity = 1;  ///< number of identical stages folded in
  double kappa = 0.0;
  double stop_time = 0.0;
  Matrix2 design;  ///< G at the stage stop
  Vec2 estimate;
  double weight_sq = 0.0;  ///< b_n^2
  bool singular = false;
  double trace_residual = 0.0;  ///< |tr G - kappa_n|
};

/// Minimal eigenvalue at or below this fraction of tr G counts as singular.
inline constexpr double kSingularRatio = 1e-10;

/// G_t = [[int X^{-1} ds, -t], [-t, int X ds]].
Matrix2 design_matrix(const PathRecord& path, double t);
Matrix2 design_matrix(const PathRecord& path, GridPoint at);

/// First time tr G_t = int (X + X^{-1}) ds reaches z.
std::optional<GridPoint> stage_stopping_time(const PathRecord& path, double z);

bool is_singular(const Matrix2& G);

/// G^+ (int X^{-1} dX, -(X_t - x0)); zero when G is singular.
Vec2 stage_mle(const PathRecord& path, double sigma, GridPoint at);

/// (1 / (|G^{-1}|_F kappa))^2 on the positive definite branch, else 0.
double stage_weight(const Matrix2& G, double kappa);

/// First k with w_1 + ... + w_k >= H, or nullopt if the weights run out.
std::optional<std::size_t> stage_count(const std::vector<double>& weights, double H);

/// Weighted mean of the stage estimates with weights multiplicity * b_n^2.
Vec2 aggregated_estimate(const std::vector<StageRecord>& stages);

struct Outcome2d {
  double stop_time = 0.0;
  Vec2 estimate;
  bool truncated = false;
  /// The path ended before the rule could be decided; more path is needed.
  bool censored = false;
  std::size_t upsilon = 0;  ///< stage count at stop (0 when not stopped)
  bool beyond_n_star = false;
  bool hit_cap = false;
  double weight_sum = 0.0;
  std::optional<double> raw_stop;
  std::vector<StageRecord> stages;
};

/// Runs the aggregated two-step rule on one path and truncates at T. Stage
/// blocks are evaluated until the weight sum reaches H, a stage stop passes T
/// (truncated), the path runs out before T (censored), or the index passes
/// 10 n_star (hit_cap, reported as truncated).
Outcome2d truncated_estimate_2d(const PathRecord& path, double sigma,
                                const ProcedureConfig& config, const KappaSchedule& schedule);

}  // namespace cirseq

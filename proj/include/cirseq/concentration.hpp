#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cirseq/bound_constants.hpp"
#include "cirseq/cir_process.hpp"
#include "cirseq/harness.hpp"
#include "cirseq/stats.hpp"

namespace cirseq {

enum class Verdict { Pass, Fail, Insufficient, Inconclusive };

std::string to_string(Verdict v);

/// int_0^T X ds - (a/b) T.
double deviation_D(const PathRecord& path, double a, double b, double T);

/// Trapezoid integral of min(1/X, r) over [0, T] on the path grid.
double clamped_inverse_integral(const PathRecord& path, double r, double T);

/// int_0^T (min(1/X, r) - mu) dt with mu = E min(1/X, r) under the stationary law.
double deviation_Delta(const PathRecord& path, double r, double T, double mu);
double deviation_Delta(const PathRecord& path, const ModelParams& params, double r, double T);

/// Empirical E V / T^m against a closed bound, one-sided at 99%.
struct MomentCheck {
  std::string quantity;  ///< "D" or "Delta"
  int m = 1;
  double T = 0.0;
  MeanSummary empirical;  ///< of V^{2m} / T^m
  double bound = 0.0;
  Verdict verdict = Verdict::Insufficient;
};

/// Replicates needed before a moment check gives a verdict.
inline constexpr std::size_t kMinReplicates = 30;

Verdict one_sided_verdict(const MeanSummary& s, double bound);

struct DeviationStudyConfig {
  ModelParams params;
  ParamRegion region;
  std::vector<double> horizons{50.0, 100.0};
  std::vector<int> orders_D{1, 2};
  std::vector<int> orders_Delta{1};
  double r = 5.0;  ///< clamp for Delta
  double step = 0.01;
  std::size_t replicates = 1000;
  bool stationary_start = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Simulates once up to the largest horizon and checks every (quantity, m, T).
std::vector<MomentCheck> deviation_study(const DeviationStudyConfig& config);

/// Single D check; N = 1 yields Verdict::Insufficient.
MomentCheck verify_D_bound(const ModelParams& params, const ParamRegion& region, int m, double T,
                           std::size_t replicates, std::uint64_t seed, double step = 0.01,
                           unsigned threads = 1, bool stationary_start = true);

/// Solution y of (sigma/2) x y' + (a - b x) y = phi(x) - mu, mu the stationary
/// mean of phi, for a bounded phi with optional kink locations.
class PoissonSolution {
 public:
  using Phi = std::function<double(double)>;

  /// phi_sup bounds |phi|; kinks are points where phi is not smooth.
  PoissonSolution(const ModelParams& params, Phi phi, double phi_sup, std::vector<double> kinks = {});
  /// phi = min(1/x, r), the family used by the a-case and 2-D procedures.
  static PoissonSolution clamped_inverse(const ModelParams& params, double r);

  double operator()(double x) const;
  /// phi(x) - mu.
  double centred_phi(double x) const { return phi_(x) - mu_; }
  double mu() const { return mu_; }
  /// (phi_* / sigma) (4 e^beta / alpha + 2^alpha Gamma(alpha) / beta^alpha + 2^alpha / beta).
  double sup_bound() const;
  /// |(sigma/2) x y'(x) + (a - b x) y(x) - phi~(x)| with a central difference.
  double ode_residual(double x, double rel_h = 1e-5) const;

 private:
  double small_form(double x) const;
  double tail_form(double x) const;

  ModelParams params_;
  Phi phi_;
  double phi_sup_;
  std::vector<double> kinks_;
  double mu_ = 0.0;
};

double poisson_solution(const ModelParams& params, double r, double x);

/// Empirical P(tau_H > T) against a closed bound.
struct TailReport {
  ProcedureKind procedure = ProcedureKind::B;
  double H = 0.0;
  double T = 0.0;
  Proportion empirical;
  double bound = 0.0;
  /// 2-D only: bound split into the deviation and stage-count parts, and the
  /// empirical frequency of upsilon_H > n*_H.
  double deviation_term = 0.0;
  double stage_term = 0.0;
  Proportion stage_empirical;
  Verdict verdict = Verdict::Insufficient;
};

TailReport stopping_tail_report(const RunSpec& spec, double bound, std::size_t replicates,
                                std::uint64_t seed, unsigned threads);

/// Normalised risks MSE * E(stop) * Fisher information.
struct EfficiencyReport {
  MeanSummary sequential_mse;
  MeanSummary sequential_stop;
  MeanSummary fixed_mse;
  double T = 0.0;
  double fisher = 0.0;
  double sequential_risk = 0.0;
  double fixed_risk = 0.0;
  double mean_stop_over_T = 0.0;
  double truncation_rate = 0.0;
};

/// `spec` must be a truncated scalar procedure (B or A); the fixed-horizon MLE
/// uses the same replicate streams.
EfficiencyReport efficiency_ratio(const RunSpec& spec, std::size_t replicates, std::uint64_t seed,
                                  unsigned threads);

}  // namespace cirseq

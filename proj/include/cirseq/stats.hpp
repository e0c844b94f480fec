#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace cirseq {

/// One-sided 99% normal quantile.
inline constexpr double kZ99 = 2.3263478740408408;
/// Two-sided 99% normal quantile, used for "within k SE" style checks.
inline constexpr double kZ995 = 2.5758293035489004;

/// Neumaier compensated sum. The result depends only on the order of add()
/// calls, so reductions done in replicate order are reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean with its standard error and a one-sided 99% upper limit.
struct MeanSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double upper99 = 0.0;
  double lower99 = 0.0;
  /// Sample excess kurtosis; large values trip the bootstrap fallback.
  double excess_kurtosis = 0.0;
  /// "normal" or "bootstrap".
  std::string ci_method = "normal";
};

/// Normal-approximation summary. Needs at least two values for an SE.
MeanSummary summarize(std::span<const double> values);

/// Kurtosis above which the normal upper limit is not trusted.
inline constexpr double kKurtosisGuard = 50.0;

/// Like summarize(), but when the excess kurtosis exceeds kKurtosisGuard the
/// upper limit becomes the larger of the normal limit and a percentile
/// bootstrap limit (2000 resamples drawn from a stream keyed by `seed`).
MeanSummary summarize_guarded(std::span<const double> values, std::uint64_t seed);

struct Proportion {
  std::size_t successes = 0;
  std::size_t n = 0;
  double p = 0.0;
  double lower99 = 0.0;  ///< one-sided Wilson limits
  double upper99 = 0.0;
};

Proportion wilson(std::size_t successes, std::size_t n, double z = kZ99);

/// Sample variance of values (n - 1 denominator) with compensated sums.
double sample_variance(std::span<const double> values);

}  // namespace cirseq

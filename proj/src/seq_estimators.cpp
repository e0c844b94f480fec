#include "cirseq/seq_estimators.hpp"

#include <stdexcept>

namespace cirseq {

void ProcedureConfig::validate() const {
  if (!(H > 0.0)) throw std::invalid_argument("threshold H must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (m < 2) throw std::invalid_argument("moment order m must be >= 2");
  if (!(r >= 1.0)) throw std::invalid_argument("clamp level r must be >= 1");
}

namespace {

EstimateOutcome truncate(const std::optional<SequentialResult>& result, double T) {
  EstimateOutcome out;
  if (result) out.raw_stop = result->tau;
  if (result && result->tau <= T) {
    out.stop_time = result->tau;
    out.estimate = result->estimate;
  } else {
    out.stop_time = T;
    out.truncated = true;
  }
  return out;
}

}  // namespace

double mle_b_fixed_horizon(const PathRecord& path, double a, double upto_time) {
  const GridPoint p = path.locate(upto_time);
  const double t = path.time_at(p);
  return (a * t - path.state_at(p) + path.initial_state()) / path.int_x_at(p);
}

std::optional<SequentialResult> sequential_estimate_b(const PathRecord& path, double a, double H) {
  const auto hit = first_crossing(path.int_x(), H);
  if (!hit) return std::nullopt;
  const double tau = path.time_at(*hit);
  return SequentialResult{tau, (a * tau - path.state_at(*hit) + path.initial_state()) / H, *hit};
}

EstimateOutcome truncated_estimate_b(const PathRecord& path, double a,
                                     const ProcedureConfig& config) {
  return truncate(sequential_estimate_b(path, a, config.H), config.T);
}

double mle_a_fixed_horizon(const PathRecord& path, double b, double sigma, double upto_time) {
  const GridPoint p = path.locate(upto_time);
  const double t = path.time_at(p);
  return (b * t + ito_log_integral(path, sigma, p)) / path.int_invx_at(p);
}

std::optional<SequentialResult> sequential_estimate_a(const PathRecord& path, double b,
                                                      double sigma, double H) {
  const auto hit = first_crossing(path.int_invx(), H);
  if (!hit) return std::nullopt;
  const double tau = path.time_at(*hit);
  return SequentialResult{tau, (b * tau + ito_log_integral(path, sigma, *hit)) / H, *hit};
}

EstimateOutcome truncated_estimate_a(const PathRecord& path, double b, double sigma,
                                     const ProcedureConfig& config) {
  return truncate(sequential_estimate_a(path, b, sigma, config.H), config.T);
}

}  // namespace cirseq

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "cirseq/cir_process.hpp"
#include "cirseq/seq_estimator_2d.hpp"
#include "cirseq/seq_estimators.hpp"

namespace cirseq {

/// Calls body(i) for i in [0, n) on `threads` workers, each owning one
/// contiguous block. Output must be written by index so the result does not
/// depend on the thread count. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = n * t / threads;
      const std::size_t hi = n * (t + 1) / threads;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Default worker count: hardware concurrency, at least 1.
unsigned default_threads();

enum class ProcedureKind { B, A, TwoD, MleB, MleA };

std::string to_string(ProcedureKind kind);
ProcedureKind parse_procedure(const std::string& name);

/// Everything one replicate needs besides its random stream.
struct RunSpec {
  ModelParams model;  ///< true parameter and x0
  ProcedureKind kind = ProcedureKind::B;
  ProcedureConfig config;
  KappaSchedule schedule;  ///< 2-D only
  double step = 0.01;
  /// false: untruncated sequential rule, simulated until it fires or
  /// max_horizon passes (then censored).
  bool truncated = true;
  double max_horizon = 0.0;
  /// Draw X_0 from the stationary law instead of using model.x0.
  bool stationary_start = false;
};

struct ReplicateResult {
  double estimate_a = 0.0;
  double estimate_b = 0.0;
  double error_sq = 0.0;  ///< squared error of the estimated coordinate(s)
  double stop_time = 0.0;
  bool truncated = false;
  bool censored = false;
  double raw_stop = -1.0;  ///< negative when not observed
  std::size_t upsilon = 0;
  bool beyond_n_star = false;
  bool hit_cap = false;
  double max_trace_residual = 0.0;  ///< max |tr G - kappa_n| relative to kappa_n
  std::size_t stage_blocks = 0;
  std::vector<StageRecord> stages;  ///< kept only when requested
};

ReplicateResult run_replicate(const RunSpec& spec, std::uint64_t seed, std::uint64_t index,
                              bool keep_stages = false);

std::vector<ReplicateResult> run_replicates(const RunSpec& spec, std::size_t n,
                                            std::uint64_t seed, unsigned threads,
                                            bool keep_stages = false);

}  // namespace cirseq

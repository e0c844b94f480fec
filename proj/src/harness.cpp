#include "cirseq/harness.hpp"

#include <algorithm>
#include <stdexcept>

namespace cirseq {

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string to_string(ProcedureKind kind) {
  switch (kind) {
    case ProcedureKind::B: return "b";
    case ProcedureKind::A: return "a";
    case ProcedureKind::TwoD: return "2d";
    case ProcedureKind::MleB: return "mle-b";
    case ProcedureKind::MleA: return "mle-a";
  }
  return "?";
}

ProcedureKind parse_procedure(const std::string& name) {
  if (name == "b") return ProcedureKind::B;
  if (name == "a") return ProcedureKind::A;
  if (name == "2d") return ProcedureKind::TwoD;
  if (name == "mle-b") return ProcedureKind::MleB;
  if (name == "mle-a") return ProcedureKind::MleA;
  throw std::invalid_argument("unknown procedure '" + name + "' (expected b, a, 2d, mle-b, mle-a)");
}

namespace {

void fill_scalar(ReplicateResult& res, const EstimateOutcome& out, double truth, bool is_b) {
  res.stop_time = out.stop_time;
  res.truncated = out.truncated;
  res.raw_stop = out.raw_stop.value_or(-1.0);
  (is_b ? res.estimate_b : res.estimate_a) = out.estimate;
  res.error_sq = (out.estimate - truth) * (out.estimate - truth);
}

void fill_sequential(ReplicateResult& res, const std::optional<SequentialResult>& seq,
                     double truth, bool is_b, double horizon) {
  if (!seq) {
    res.censored = true;
    res.stop_time = horizon;
    return;
  }
  res.stop_time = seq->tau;
  res.raw_stop = seq->tau;
  (is_b ? res.estimate_b : res.estimate_a) = seq->estimate;
  res.error_sq = (seq->estimate - truth) * (seq->estimate - truth);
}

}  // namespace

ReplicateResult run_replicate(const RunSpec& spec, std::uint64_t seed, std::uint64_t index,
                              bool keep_stages) {
  ModelParams model = spec.model;
  ReplicateResult res;
  const double T = spec.config.T;
  const double horizon = spec.truncated ? T : spec.max_horizon;
  if (!(horizon > 0.0)) throw std::invalid_argument("simulation horizon must be positive");

  auto fresh_stream = [&] {
    Rng rng = replicate_stream(seed, index);
    if (spec.stationary_start) model.x0 = sample_stationary(spec.model, rng);
    return rng;
  };
  Rng rng = fresh_stream();

  switch (spec.kind) {
    case ProcedureKind::B: {
      const PathRecord path =
          simulate_until(model, spec.step, rng, Functional::IntX, spec.config.H, horizon);
      if (spec.truncated) {
        fill_scalar(res, truncated_estimate_b(path, model.a, spec.config), model.b, true);
      } else {
        fill_sequential(res, sequential_estimate_b(path, model.a, spec.config.H), model.b, true,
                        horizon);
      }
      break;
    }
    case ProcedureKind::A: {
      const PathRecord path =
          simulate_until(model, spec.step, rng, Functional::IntInvX, spec.config.H, horizon);
      if (spec.truncated) {
        fill_scalar(res, truncated_estimate_a(path, model.b, model.sigma, spec.config), model.a,
                    false);
      } else {
        fill_sequential(res, sequential_estimate_a(path, model.b, model.sigma, spec.config.H),
                        model.a, false, horizon);
      }
      break;
    }
    case ProcedureKind::TwoD: {
      ProcedureConfig config = spec.config;
      config.T = horizon;
      // Most runs stop in the first block, so simulate only until tr G = H
      // and replay the same stream to the full horizon when that is not enough.
      PathRecord path =
          simulate_until(model, spec.step, rng, Functional::Trace, spec.schedule.H, horizon);
      Outcome2d out = truncated_estimate_2d(path, model.sigma, config, spec.schedule);
      if (out.censored) {
        Rng replay = fresh_stream();
        path = simulate_path(model, horizon, spec.step, replay);
        out = truncated_estimate_2d(path, model.sigma, config, spec.schedule);
      }
      res.stop_time = out.stop_time;
      res.truncated = out.truncated && spec.truncated;
      res.censored = (out.truncated && !spec.truncated) || out.censored;
      res.raw_stop = out.raw_stop.value_or(-1.0);
      res.estimate_a = out.estimate.a;
      res.estimate_b = out.estimate.b;
      res.error_sq = (out.estimate - Vec2{model.a, model.b}).norm_sq();
      res.upsilon = out.upsilon;
      res.beyond_n_star = out.beyond_n_star;
      res.hit_cap = out.hit_cap;
      res.stage_blocks = out.stages.size();
      for (const auto& s : out.stages) {
        res.max_trace_residual = std::max(res.max_trace_residual, s.trace_residual / s.kappa);
      }
      if (keep_stages) res.stages = std::move(out.stages);
      break;
    }
    case ProcedureKind::MleB: {
      const PathRecord path = simulate_path(model, T, spec.step, rng);
      const double est = mle_b_fixed_horizon(path, model.a, T);
      res.stop_time = T;
      res.estimate_b = est;
      res.error_sq = (est - model.b) * (est - model.b);
      break;
    }
    case ProcedureKind::MleA: {
      const PathRecord path = simulate_path(model, T, spec.step, rng);
      const double est = mle_a_fixed_horizon(path, model.b, model.sigma, T);
      res.stop_time = T;
      res.estimate_a = est;
      res.error_sq = (est - model.a) * (est - model.a);
      break;
    }
  }
  return res;
}

std::vector<ReplicateResult> run_replicates(const RunSpec& spec, std::size_t n,
                                            std::uint64_t seed, unsigned threads,
                                            bool keep_stages) {
  std::vector<ReplicateResult> out(n);
  parallel_for(n, threads,
               [&](std::size_t i) { out[i] = run_replicate(spec, seed, i, keep_stages); });
  return out;
}

}  // namespace cirseq

#include "cirseq/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cirseq/quadrature.hpp"

namespace cirseq {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Insufficient: return "insufficient replicates";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

double deviation_D(const PathRecord& path, double a, double b, double T) {
  const GridPoint p = path.locate(T);
  return path.int_x_at(p) - (a / b) * path.time_at(p);
}

double clamped_inverse_integral(const PathRecord& path, double r, double T) {
  const GridPoint end = path.locate(T);
  const auto states = path.states();
  auto phi = [r](double x) { return std::min(1.0 / x, r); };
  const double half = 0.5 * path.step();
  CompensatedSum sum;
  for (std::size_t k = 0; k < end.node; ++k) sum.add(half * (phi(states[k]) + phi(states[k + 1])));
  if (end.frac > 0.0) {
    const double x_end = path.state_at(end);
    sum.add(0.5 * end.frac * path.step() * (phi(states[end.node]) + phi(x_end)));
  }
  return sum.value();
}

double deviation_Delta(const PathRecord& path, double r, double T, double mu) {
  const GridPoint p = path.locate(T);
  return clamped_inverse_integral(path, r, T) - mu * path.time_at(p);
}

double deviation_Delta(const PathRecord& path, const ModelParams& params, double r, double T) {
  return deviation_Delta(path, r, T, mu_a_theta(params.a, params.b, params.sigma, r));
}

Verdict one_sided_verdict(const MeanSummary& s, double bound) {
  if (s.n < kMinReplicates) return Verdict::Insufficient;
  return s.upper99 <= bound ? Verdict::Pass : Verdict::Fail;
}

std::vector<MomentCheck> deviation_study(const DeviationStudyConfig& config) {
  config.params.validate();
  config.region.validate();
  if (config.horizons.empty()) throw std::invalid_argument("deviation study needs a horizon");
  for (double T : config.horizons) {
    if (!(T >= 1.0)) throw std::invalid_argument("concentration bounds need T >= 1");
  }
  const double t_max = *std::max_element(config.horizons.begin(), config.horizons.end());
  const bool want_delta = !config.orders_Delta.empty();
  const double mu =
      want_delta ? mu_a_theta(config.params.a, config.params.b, config.params.sigma, config.r) : 0.0;

  const std::size_t nT = config.horizons.size();
  std::vector<double> d(config.replicates * nT);
  std::vector<double> delta(config.replicates * nT);
  parallel_for(config.replicates, config.threads, [&](std::size_t i) {
    Rng rng = replicate_stream(config.seed, i);
    ModelParams p = config.params;
    if (config.stationary_start) p.x0 = sample_stationary(config.params, rng);
    const PathRecord path = simulate_path(p, t_max, config.step, rng);
    for (std::size_t j = 0; j < nT; ++j) {
      const double T = config.horizons[j];
      d[i * nT + j] = deviation_D(path, p.a, p.b, T);
      if (want_delta) delta[i * nT + j] = deviation_Delta(path, config.r, T, mu);
    }
  });

  std::vector<MomentCheck> out;
  auto check = [&](const std::string& name, const std::vector<double>& values, int m,
                   std::size_t j, double bound) {
    const double T = config.horizons[j];
    std::vector<double> powered(config.replicates);
    for (std::size_t i = 0; i < config.replicates; ++i) {
      powered[i] = std::pow(values[i * nT + j], 2 * m) / std::pow(T, m);
    }
    MomentCheck c;
    c.quantity = name;
    c.m = m;
    c.T = T;
    c.empirical = summarize_guarded(powered, config.seed ^ (static_cast<std::uint64_t>(m) << 32) ^ j);
    c.bound = bound;
    c.verdict = one_sided_verdict(c.empirical, bound);
    out.push_back(c);
  };
  for (int m : config.orders_D) {
    const double bound = d_moment_bound(config.region, m);
    for (std::size_t j = 0; j < nT; ++j) check("D", d, m, j, bound);
  }
  for (int m : config.orders_Delta) {
    const double bound = delta_moment_bound(config.region, m, config.r);
    for (std::size_t j = 0; j < nT; ++j) check("Delta", delta, m, j, bound);
  }
  return out;
}

MomentCheck verify_D_bound(const ModelParams& params, const ParamRegion& region, int m, double T,
                           std::size_t replicates, std::uint64_t seed, double step,
                           unsigned threads, bool stationary_start) {
  if (m < 1) throw std::invalid_argument("moment order m must be >= 1");
  DeviationStudyConfig cfg;
  cfg.params = params;
  cfg.region = region;
  cfg.horizons = {T};
  cfg.orders_D = {m};
  cfg.orders_Delta = {};
  cfg.step = step;
  cfg.replicates = replicates;
  cfg.stationary_start = stationary_start;
  cfg.seed = seed;
  cfg.threads = threads;
  return deviation_study(cfg).front();
}

// ---------------------------------------------------------------------------

PoissonSolution::PoissonSolution(const ModelParams& params, Phi phi, double phi_sup,
                                 std::vector<double> kinks)
    : params_(params), phi_(std::move(phi)), phi_sup_(phi_sup), kinks_(std::move(kinks)) {
  params_.validate();
  const double alpha = params_.alpha();
  const double beta = params_.beta();
  const double mode = std::max(0.0, (alpha - 1.0) / beta);
  std::vector<double> breaks = kinks_;
  breaks.push_back(mode);
  breaks.push_back(mode + 4.0 * std::sqrt(alpha) / beta);
  mu_ = integrate_split([&](double z) { return z > 0.0 ? phi_(z) * stationary_density(params_, z) : 0.0; },
                        0.0, gamma_upper_cutoff(alpha, beta), breaks);
}

PoissonSolution PoissonSolution::clamped_inverse(const ModelParams& params, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("clamp level r must be >= 1");
  return PoissonSolution(
      params, [r](double x) { return std::min(1.0 / x, r); }, r, {1.0 / r});
}

double PoissonSolution::small_form(double x) const {
  // (2/sigma) int_0^1 phi~(xv) v^{alpha-1} e^{beta x (1-v)} dv
  const double alpha = params_.alpha();
  const double beta = params_.beta();
  auto f = [&](double v) {
    if (v <= 0.0) return 0.0;
    return centred_phi(x * v) * std::exp((alpha - 1.0) * std::log(v) + beta * x * (1.0 - v));
  };
  std::vector<double> breaks;
  for (double k : kinks_) breaks.push_back(k / x);
  return 2.0 / params_.sigma * integrate_split(f, 0.0, 1.0, breaks);
}

double PoissonSolution::tail_form(double x) const {
  // -(2/(sigma x)) int_0^inf phi~(x+s) (1 + s/x)^{alpha-1} e^{-beta s} ds
  const double alpha = params_.alpha();
  const double beta = params_.beta();
  auto log_weight = [&](double s) { return (alpha - 1.0) * std::log1p(s / x) - beta * s; };
  double upper = std::max(0.0, (alpha - 1.0) / beta - x) + 1.0 / beta;
  while (log_weight(upper) > -46.0) upper *= 2.0;
  auto f = [&](double s) { return centred_phi(x + s) * std::exp(log_weight(s)); };
  std::vector<double> breaks;
  for (double k : kinks_) breaks.push_back(k - x);
  return -2.0 / (params_.sigma * x) * integrate_split(f, 0.0, upper, breaks);
}

double PoissonSolution::operator()(double x) const {
  if (!(x > 0.0)) throw std::invalid_argument("Poisson solution needs x > 0");
  const double mode = (params_.alpha() - 1.0) / params_.beta();
  return x <= std::max(mode, 0.0) ? small_form(x) : tail_form(x);
}

double PoissonSolution::sup_bound() const {
  return phi_sup_ / params_.sigma * corrector_bracket(params_.alpha(), params_.beta());
}

double PoissonSolution::ode_residual(double x, double rel_h) const {
  const double h = rel_h * x;
  const double y = (*this)(x);
  const double dy = ((*this)(x + h) - (*this)(x - h)) / (2.0 * h);
  return std::fabs(0.5 * params_.sigma * x * dy + (params_.a - params_.b * x) * y - centred_phi(x));
}

double poisson_solution(const ModelParams& params, double r, double x) {
  return PoissonSolution::clamped_inverse(params, r)(x);
}

// ---------------------------------------------------------------------------

TailReport stopping_tail_report(const RunSpec& spec, double bound, std::size_t replicates,
                                std::uint64_t seed, unsigned threads) {
  if (!spec.truncated) throw std::invalid_argument("tail report needs the truncated procedure");
  const auto results = run_replicates(spec, replicates, seed, threads);
  std::size_t late = 0;
  std::size_t many_stages = 0;
  for (const auto& r : results) {
    if (r.truncated) ++late;
    if (r.beyond_n_star || r.hit_cap) ++many_stages;
  }
  TailReport rep;
  rep.procedure = spec.kind;
  rep.H = spec.config.H;
  rep.T = spec.config.T;
  rep.empirical = wilson(late, replicates);
  rep.stage_empirical = wilson(many_stages, replicates);
  rep.bound = bound;
  rep.verdict = replicates < kMinReplicates ? Verdict::Insufficient
                : rep.empirical.upper99 <= bound ? Verdict::Pass
                                                 : Verdict::Fail;
  return rep;
}

EfficiencyReport efficiency_ratio(const RunSpec& spec, std::size_t replicates, std::uint64_t seed,
                                  unsigned threads) {
  if (spec.kind != ProcedureKind::B && spec.kind != ProcedureKind::A) {
    throw std::invalid_argument("efficiency ratio needs a scalar sequential procedure");
  }
  const bool is_b = spec.kind == ProcedureKind::B;
  RunSpec fixed = spec;
  fixed.kind = is_b ? ProcedureKind::MleB : ProcedureKind::MleA;

  const auto seq = run_replicates(spec, replicates, seed, threads);
  const auto mle = run_replicates(fixed, replicates, seed, threads);
  std::vector<double> err(replicates), stop(replicates), err_fixed(replicates);
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < replicates; ++i) {
    err[i] = seq[i].error_sq;
    stop[i] = seq[i].stop_time;
    err_fixed[i] = mle[i].error_sq;
    if (seq[i].truncated) ++truncated;
  }
  EfficiencyReport rep;
  rep.T = spec.config.T;
  rep.sequential_mse = summarize(err);
  rep.sequential_stop = summarize(stop);
  rep.fixed_mse = summarize(err_fixed);
  const ModelParams& p = spec.model;
  rep.fisher = is_b ? fisher_info(FisherCase::EstimateB, p.b, p.a, p.sigma)
                    : fisher_info(FisherCase::EstimateA, p.a, p.b, p.sigma);
  rep.sequential_risk = rep.sequential_mse.mean * rep.sequential_stop.mean * rep.fisher;
  rep.fixed_risk = rep.fixed_mse.mean * rep.T * rep.fisher;
  rep.mean_stop_over_T = rep.sequential_stop.mean / rep.T;
  rep.truncation_rate = static_cast<double>(truncated) / static_cast<double>(std::max<std::size_t>(replicates, 1));
  return rep;
}

}  // namespace cirseq

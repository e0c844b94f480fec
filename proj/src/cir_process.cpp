#include "cirseq/cir_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cirseq {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite, got " +
                                std::to_string(v));
  }
}

}  // namespace

void ModelParams::validate() const {
  require_positive(a, "a");
  require_positive(b, "b");
  require_positive(sigma, "sigma");
  require_positive(x0, "x0");
}

double transition_mean(const ModelParams& params, double x_from, double dt) {
  const double decay = std::exp(-params.b * dt);
  return x_from * decay + (params.a / params.b) * (1.0 - decay);
}

double transition_variance(const ModelParams& params, double x_from, double dt) {
  const double decay = std::exp(-params.b * dt);
  const double one_minus = -std::expm1(-params.b * dt);
  return x_from * params.sigma / params.b * (decay - decay * decay) +
         params.a * params.sigma / (2.0 * params.b * params.b) * one_minus * one_minus;
}

double stationary_density(const ModelParams& params, double z) {
  if (z < 0.0) return 0.0;
  const double alpha = params.alpha();
  const double beta = params.beta();
  if (z == 0.0) {
    if (alpha > 1.0) return 0.0;
    if (alpha == 1.0) return beta;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1.0) * std::log(z) -
                  beta * z);
}

double stationary_moment(const ModelParams& params, double q) {
  const double alpha = params.alpha();
  if (!(q > -alpha)) {
    throw std::domain_error("stationary moment of order " + std::to_string(q) +
                            " diverges: need q > -2a/sigma = " + std::to_string(-alpha));
  }
  return std::exp(std::lgamma(alpha + q) - std::lgamma(alpha) - q * std::log(params.beta()));
}

TransitionSampler::TransitionSampler(const ModelParams& params, double dt)
    : scale_(-params.sigma * std::expm1(-params.b * dt) / (4.0 * params.b)),
      decay_(std::exp(-params.b * dt)),
      dof_(4.0 * params.a / params.sigma),
      central_(dof_ > 1.0 ? 0.5 * (dof_ - 1.0) : 1.0, 2.0) {
  if (!(dt > 0.0)) throw std::invalid_argument("transition step must be positive");
}

double TransitionSampler::draw_noncentral(double lambda, Rng& rng) {
  if (dof_ > 1.0) {
    const double shifted = normal_(rng) + std::sqrt(lambda);
    return shifted * shifted + central_(rng);
  }
  std::poisson_distribution<long long> poisson(0.5 * lambda);
  const long long n = lambda > 0.0 ? poisson(rng) : 0;
  std::gamma_distribution<double> mixed(0.5 * dof_ + static_cast<double>(n), 2.0);
  return mixed(rng);
}

double TransitionSampler::operator()(double x_from, Rng& rng) {
  const double lambda = x_from * decay_ / scale_;
  for (;;) {
    const double next = scale_ * draw_noncentral(lambda, rng);
    // Zero has probability zero under the exact law; only underflow produces it.
    if (next > 0.0 && std::isfinite(next)) return next;
  }
}

double sample_transition(const ModelParams& params, double x_from, double dt, Rng& rng) {
  TransitionSampler sampler(params, dt);
  return sampler(x_from, rng);
}

double sample_stationary(const ModelParams& params, Rng& rng) {
  std::gamma_distribution<double> law(params.alpha(), 1.0 / params.beta());
  for (;;) {
    const double x = law(rng);
    if (x > 0.0) return x;
  }
}

PathBuilder::PathBuilder(double step, double x0, std::size_t reserve) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(x0 > 0.0)) throw std::invalid_argument("initial state must be positive");
  rec_.step_ = step;
  for (auto* v : {&rec_.times_, &rec_.states_, &rec_.int_x_, &rec_.int_invx_, &rec_.log_state_}) {
    v->reserve(reserve);
  }
  rec_.times_.push_back(0.0);
  rec_.states_.push_back(x0);
  rec_.int_x_.push_back(0.0);
  rec_.int_invx_.push_back(0.0);
  rec_.log_state_.push_back(std::log(x0));
}

void PathBuilder::push(double state) {
  if (!(state > 0.0)) throw std::invalid_argument("path states must be strictly positive");
  const double prev = rec_.states_.back();
  const double half = 0.5 * rec_.step_;
  rec_.times_.push_back(static_cast<double>(rec_.states_.size()) * rec_.step_);
  rec_.int_x_.push_back(rec_.int_x_.back() + half * (prev + state));
  rec_.int_invx_.push_back(rec_.int_invx_.back() + half * (1.0 / prev + 1.0 / state));
  rec_.log_state_.push_back(std::log(state));
  rec_.states_.push_back(state);
}

PathRecord PathBuilder::finish() && { return std::move(rec_); }

PathRecord PathRecord::from_states(double step, std::vector<double> states) {
  if (states.empty()) throw std::invalid_argument("path needs at least one node");
  PathBuilder builder(step, states.front(), states.size());
  for (std::size_t k = 1; k < states.size(); ++k) builder.push(states[k]);
  return std::move(builder).finish();
}

GridPoint PathRecord::locate(double t) const {
  if (!(t > 0.0)) return {};
  const double pos = t / step_;
  const auto last = states_.size() - 1;
  if (pos >= static_cast<double>(last)) return {last, 0.0};
  const auto node = static_cast<std::size_t>(std::floor(pos));
  return {node, pos - static_cast<double>(node)};
}

void PathRecord::write_csv(std::ostream& os) const {
  os << "t,X,int_x,int_invx\n";
  const auto precision = os.precision(17);
  for (std::size_t k = 0; k < states_.size(); ++k) {
    os << times_[k] << ',' << states_[k] << ',' << int_x_[k] << ',' << int_invx_[k] << '\n';
  }
  os.precision(precision);
}

PathRecord simulate_path(const ModelParams& params, double horizon, double step, Rng& rng) {
  params.validate();
  if (!(horizon > 0.0) || !(step > 0.0) || step > horizon * (1.0 + 1e-12)) {
    throw std::invalid_argument("simulate_path needs horizon > 0 and 0 < step <= horizon");
  }
  const auto steps = std::max<long long>(1, std::llround(horizon / step));
  TransitionSampler sampler(params, step);
  PathBuilder builder(step, params.x0, static_cast<std::size_t>(steps) + 1);
  double x = params.x0;
  for (long long k = 0; k < steps; ++k) {
    x = sampler(x, rng);
    builder.push(x);
  }
  return std::move(builder).finish();
}

PathRecord simulate_until(const ModelParams& params, double step, Rng& rng, Functional which,
                          double level, double max_horizon) {
  params.validate();
  TransitionSampler sampler(params, step);
  const auto max_steps = std::max<long long>(1, std::llround(std::ceil(max_horizon / step)));
  PathBuilder builder(step, params.x0);
  auto reached = [&] {
    switch (which) {
      case Functional::IntX: return builder.last_int_x() >= level;
      case Functional::IntInvX: return builder.last_int_invx() >= level;
      case Functional::Trace: return builder.last_int_x() + builder.last_int_invx() >= level;
    }
    return true;
  };
  double x = params.x0;
  for (long long k = 0; k < max_steps && !reached(); ++k) {
    x = sampler(x, rng);
    builder.push(x);
  }
  return std::move(builder).finish();
}

double ito_log_integral(const PathRecord& path, double sigma, std::size_t upto) {
  return path.log_state()[upto] - path.log_state()[0] + 0.5 * sigma * path.int_invx()[upto];
}

double ito_log_integral(const PathRecord& path, double sigma, GridPoint at) {
  if (at.frac == 0.0) return ito_log_integral(path, sigma, at.node);
  return std::log(path.state_at(at)) - path.log_state()[0] + 0.5 * sigma * path.int_invx_at(at);
}

namespace {

template <typename ValueAt>
std::optional<GridPoint> crossing_impl(std::size_t n, ValueAt value_at, double level) {
  if (n == 0) return std::nullopt;
  if (value_at(0) >= level) return GridPoint{};
  if (value_at(n - 1) < level) return std::nullopt;
  // Invariant: value_at(lo) < level <= value_at(hi).
  std::size_t lo = 0;
  std::size_t hi = n - 1;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (value_at(mid) >= level) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double below = value_at(lo);
  const double frac = (level - below) / (value_at(hi) - below);
  if (frac >= 1.0) return GridPoint{hi, 0.0};
  return GridPoint{lo, frac};
}

}  // namespace

std::optional<GridPoint> first_crossing(std::span<const double> cumulative, double level) {
  return crossing_impl(cumulative.size(), [&](std::size_t k) { return cumulative[k]; }, level);
}

std::optional<GridPoint> first_crossing(std::span<const double> first,
                                        std::span<const double> second, double level) {
  return crossing_impl(
      first.size(), [&](std::size_t k) { return first[k] + second[k]; }, level);
}

}  // namespace cirseq

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cirseq/rng.hpp"

namespace cirseq {

/// Drift and diffusion of dX = (a - bX) dt + sqrt(sigma X) dW with X_0 = x0.
struct ModelParams {
  double a = 1.0;
  double b = 0.5;
  double sigma = 0.5;
  double x0 = 1.0;

  /// Shape of the stationary Gamma law.
  double alpha() const { return 2.0 * a / sigma; }
  /// Rate of the stationary Gamma law.
  double beta() const { return 2.0 * b / sigma; }

  /// Throws std::invalid_argument unless a, b, sigma, x0 are all positive and finite.
  void validate() const;
};

/// Position on a uniform grid: time = (node + frac) * step, frac in [0, 1).
struct GridPoint {
  std::size_t node = 0;
  double frac = 0.0;
};

/// Discretised trajectory on the uniform grid t_k = k * step with trapezoid
/// accumulators for the time integrals of X and 1/X.
///
/// Immutable once built. Values between nodes are linear interpolations of
/// the node values, which makes every cumulative functional piecewise linear
/// in time.
class PathRecord {
 public:
  /// Builds the record from node states. Throws if a state is not strictly
  /// positive or fewer than one node is given.
  static PathRecord from_states(double step, std::vector<double> states);

  double step() const { return step_; }
  std::size_t size() const { return states_.size(); }
  double horizon() const { return times_.back(); }
  double initial_state() const { return states_.front(); }

  std::span<const double> times() const { return times_; }
  std::span<const double> states() const { return states_; }
  std::span<const double> int_x() const { return int_x_; }
  std::span<const double> int_invx() const { return int_invx_; }
  std::span<const double> log_state() const { return log_state_; }

  /// Grid position of model time t, clamped to [0, horizon].
  GridPoint locate(double t) const;
  double time_at(GridPoint p) const { return (static_cast<double>(p.node) + p.frac) * step_; }

  double state_at(GridPoint p) const { return interpolate(states_, p); }
  double int_x_at(GridPoint p) const { return interpolate(int_x_, p); }
  double int_invx_at(GridPoint p) const { return interpolate(int_invx_, p); }

  /// Columnar dump: t,X,int_x,int_invx.
  void write_csv(std::ostream& os) const;

  static double interpolate(std::span<const double> values, GridPoint p) {
    if (p.frac == 0.0) return values[p.node];
    return values[p.node] + p.frac * (values[p.node + 1] - values[p.node]);
  }

 private:
  PathRecord() = default;

  double step_ = 0.0;
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> int_x_;
  std::vector<double> int_invx_;
  std::vector<double> log_state_;

  friend class PathBuilder;
};

/// Closed-form mean of X_{t+dt} given X_t = x_from.
double transition_mean(const ModelParams& params, double x_from, double dt);
/// Closed-form variance of X_{t+dt} given X_t = x_from.
double transition_variance(const ModelParams& params, double x_from, double dt);

/// Stationary Gamma(alpha, beta) density; zero for z < 0.
double stationary_density(const ModelParams& params, double z);
/// Stationary moment E X^q = Gamma(alpha+q) / (Gamma(alpha) beta^q). Requires q > -alpha.
double stationary_moment(const ModelParams& params, double q);

/// Exact CIR transition sampler for a fixed step dt.
///
/// X_{t+dt} = c * chi'^2(d, lambda) with c = sigma (1 - e^{-b dt}) / (4b),
/// d = 4a/sigma and lambda = x e^{-b dt} / c. For d > 1 the noncentral
/// chi-square is drawn as (Z + sqrt(lambda))^2 + chi^2(d - 1); otherwise as a
/// Poisson mixture of central chi-squares, chi^2(d + 2N) with N ~ Poisson(lambda/2).
class TransitionSampler {
 public:
  TransitionSampler(const ModelParams& params, double dt);

  double operator()(double x_from, Rng& rng);

  double scale() const { return scale_; }
  double degrees_of_freedom() const { return dof_; }

 private:
  double draw_noncentral(double lambda, Rng& rng);

  double scale_;
  double decay_;
  double dof_;
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> central_;
};

/// Single exact transition draw. Always returns a strictly positive state.
double sample_transition(const ModelParams& params, double x_from, double dt, Rng& rng);

/// Draws X_0 from the stationary law.
double sample_stationary(const ModelParams& params, Rng& rng);

/// Incremental path construction; used by simulate_path and by the streaming
/// simulators that run until a functional crosses a level.
class PathBuilder {
 public:
  PathBuilder(double step, double x0, std::size_t reserve = 0);

  void push(double state);
  std::size_t size() const { return rec_.states_.size(); }
  double last_state() const { return rec_.states_.back(); }
  double last_int_x() const { return rec_.int_x_.back(); }
  double last_int_invx() const { return rec_.int_invx_.back(); }
  double last_time() const { return rec_.times_.back(); }

  PathRecord finish() &&;

 private:
  PathRecord rec_;
};

/// Simulates X on the grid {0, step, ..., N step} with N = round(horizon/step)
/// (at least 1) using exact transitions.
PathRecord simulate_path(const ModelParams& params, double horizon, double step, Rng& rng);

/// Accumulated functional that a stopping rule watches.
enum class Functional { IntX, IntInvX, Trace };

/// Simulates until the chosen functional reaches `level` or the time reaches
/// `max_horizon`, whichever comes first.
PathRecord simulate_until(const ModelParams& params, double step, Rng& rng, Functional which,
                          double level, double max_horizon);

/// int_0^t X^{-1} dX via the Ito identity ln(X_t/X_0) + (sigma/2) int_0^t X^{-1} ds.
double ito_log_integral(const PathRecord& path, double sigma, std::size_t upto);
double ito_log_integral(const PathRecord& path, double sigma, GridPoint at);

/// First grid position where a nondecreasing cumulative sequence reaches
/// `level`, with linear interpolation inside the step. nullopt if never.
std::optional<GridPoint> first_crossing(std::span<const double> cumulative, double level);

/// Same, for the node-wise sum of two cumulative sequences.
std::optional<GridPoint> first_crossing(std::span<const double> first,
                                        std::span<const double> second, double level);

}  // namespace cirseq

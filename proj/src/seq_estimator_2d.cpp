#include "cirseq/seq_estimator_2d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cirseq {

std::size_t KappaSchedule::flat_count() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n_star)));
}

double KappaSchedule::kappa(std::size_t n) const {
  if (n <= flat_count()) return H;
  return std::pow(static_cast<double>(n), varpi);
}

void KappaSchedule::validate() const {
  if (!(H >= 1.0)) throw std::invalid_argument("2d procedure needs threshold H >= 1");
  if (!(varpi > 1.0 && varpi < 2.0)) throw std::invalid_argument("kappa exponent varpi must lie in (1, 2)");
  if (!(n_star > 0.0)) throw std::invalid_argument("n*_H = 2 u_* H must be positive");
}

Matrix2 design_matrix(const PathRecord& path, GridPoint at) {
  return {path.int_invx_at(at), -path.time_at(at), path.int_x_at(at)};
}

Matrix2 design_matrix(const PathRecord& path, double t) {
  return design_matrix(path, path.locate(t));
}

std::optional<GridPoint> stage_stopping_time(const PathRecord& path, double z) {
  return first_crossing(path.int_x(), path.int_invx(), z);
}

bool is_singular(const Matrix2& G) {
  return !(G.min_eigenvalue() > kSingularRatio * G.trace());
}

Vec2 stage_mle(const PathRecord& path, double sigma, GridPoint at) {
  const Matrix2 G = design_matrix(path, at);
  if (is_singular(G)) return {};
  const Vec2 observed{ito_log_integral(path, sigma, at),
                      -(path.state_at(at) - path.initial_state())};
  return G.inverse() * observed;
}

double stage_weight(const Matrix2& G, double kappa) {
  if (is_singular(G)) return 0.0;
  const double b = 1.0 / (G.inverse().frobenius() * kappa);
  return b * b;
}

std::optional<std::size_t> stage_count(const std::vector<double>& weights, double H) {
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    sum += weights[k];
    if (sum >= H) return k + 1;
  }
  return std::nullopt;
}

Vec2 aggregated_estimate(const std::vector<StageRecord>& stages) {
  double total = 0.0;
  Vec2 acc;
  for (const auto& s : stages) {
    const double w = static_cast<double>(s.multiplicity) * s.weight_sq;
    total += w;
    acc = acc + w * s.estimate;
  }
  if (total <= 0.0) return {};
  return (1.0 / total) * acc;
}

namespace {

StageRecord evaluate_stage(const PathRecord& path, double sigma, std::size_t index, double kappa,
                           GridPoint at) {
  StageRecord s;
  s.index = index;
  s.kappa = kappa;
  s.stop_time = path.time_at(at);
  s.design = design_matrix(path, at);
  s.singular = is_singular(s.design);
  s.estimate = stage_mle(path, sigma, at);
  s.weight_sq = stage_weight(s.design, kappa);
  s.trace_residual = std::fabs(s.design.trace() - kappa);
  return s;
}

/// Smallest k with k * w >= need, guarding against rounding in need / w.
std::size_t copies_needed(double need, double w) {
  auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(need / w)));
  while (k > 1 && static_cast<double>(k - 1) * w >= need) --k;
  while (static_cast<double>(k) * w < need) ++k;
  return k;
}

}  // namespace

Outcome2d truncated_estimate_2d(const PathRecord& path, double sigma,
                                const ProcedureConfig& config, const KappaSchedule& schedule) {
  schedule.validate();
  Outcome2d out;
  const double H = schedule.H;
  const auto cap = static_cast<std::size_t>(std::ceil(10.0 * schedule.n_star));

  auto finish_truncated = [&] {
    out.truncated = true;
    out.stop_time = config.T;
    out.estimate = {};
    return out;
  };

  std::size_t n = 1;
  double sum = 0.0;
  while (true) {
    if (n > cap) {
      out.hit_cap = true;
      return finish_truncated();
    }
    const double kappa = schedule.kappa(n);
    const auto at = stage_stopping_time(path, kappa);
    if (!at) {
      if (path.horizon() < config.T) {
        out.censored = true;
        return out;
      }
      return finish_truncated();
    }
    StageRecord stage = evaluate_stage(path, sigma, n, kappa, *at);
    if (stage.stop_time > config.T) {
      return finish_truncated();
    }
    const std::size_t block_end = n <= schedule.flat_count() ? schedule.flat_count() : n;
    std::size_t copies = block_end - n + 1;
    if (stage.weight_sq > 0.0) {
      copies = std::min(copies, copies_needed(H - sum, stage.weight_sq));
    }
    stage.multiplicity = copies;
    sum += static_cast<double>(copies) * stage.weight_sq;
    out.stages.push_back(stage);
    n += copies;
    if (sum >= H) {
      out.upsilon = n - 1;
      out.weight_sum = sum;
      out.beyond_n_star = static_cast<double>(out.upsilon) > schedule.n_star;
      out.stop_time = stage.stop_time;
      out.raw_stop = stage.stop_time;
      out.estimate = aggregated_estimate(out.stages);
      return out;
    }
  }
}

}  // namespace cirseq

#include <cmath>
#include <vector>

#include "doctest.h"

#include "cirseq/bound_constants.hpp"
#include "cirseq/seq_estimator_2d.hpp"

using namespace cirseq;
using doctest::Approx;

namespace {

const ModelParams kRef{1.0, 0.5, 0.5, 2.0};

PathRecord deterministic_path(double a, double b, double x0, double T, double step) {
  const auto n = static_cast<std::size_t>(std::llround(T / step));
  std::vector<double> xs(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    xs[k] = a / b + (x0 - a / b) * std::exp(-b * step * static_cast<double>(k));
  }
  return PathRecord::from_states(step, std::move(xs));
}

// Stage-by-stage evaluation: weights are added one stage at a time. Only the
// crossing search is cached, since equal kappa gives the same stop.
struct Naive {
  bool stopped = false;
  std::size_t upsilon = 0;
  Vec2 estimate;
  double stop_time = 0.0;
};

Naive naive_2d(const PathRecord& path, double sigma, const KappaSchedule& s, double T) {
  Naive out;
  double wsum = 0.0;
  Vec2 acc;
  double cached_kappa = -1.0;
  std::optional<GridPoint> at;
  for (std::size_t n = 1; n <= 10 * static_cast<std::size_t>(s.n_star) + 10; ++n) {
    const double kappa = s.kappa(n);
    if (kappa != cached_kappa) {
      at = stage_stopping_time(path, kappa);
      cached_kappa = kappa;
    }
    if (!at || path.time_at(*at) > T) return out;
    const double w = stage_weight(design_matrix(path, *at), kappa);
    wsum += w;
    acc = acc + w * stage_mle(path, sigma, *at);
    if (wsum >= s.H) {
      out.stopped = true;
      out.upsilon = n;
      out.estimate = (1.0 / wsum) * acc;
      out.stop_time = path.time_at(*at);
      return out;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("kappa schedule") {
  const KappaSchedule s = KappaSchedule::make(3.0, 2.0, 1.5);
  CHECK(s.n_star == 12.0);
  CHECK(s.flat_count() == 12);
  CHECK(s.kappa(1) == 3.0);
  CHECK(s.kappa(12) == 3.0);
  CHECK(s.kappa(13) == Approx(std::pow(13.0, 1.5)));
  CHECK(s.delta_star() == Approx(0.25));
  CHECK_THROWS(KappaSchedule{0.5, 1.5, 1.0}.validate());
  CHECK_THROWS(KappaSchedule{2.0, 2.0, 1.0}.validate());
}

TEST_CASE("design matrix and singular branch") {
  const PathRecord flat = PathRecord::from_states(0.5, {1.0, 1.0, 1.0});
  const Matrix2 G = design_matrix(flat, 1.0);
  CHECK(G.xx == Approx(1.0));
  CHECK(G.xy == Approx(-1.0));
  CHECK(G.yy == Approx(1.0));
  CHECK(is_singular(G));
  CHECK(stage_weight(G, 2.0) == 0.0);
  CHECK(stage_mle(flat, 0.5, flat.locate(1.0)) == Vec2{});
  CHECK(design_matrix(flat, 0.0) == Matrix2{});
}

TEST_CASE("noise-free path recovers both coordinates") {
  const PathRecord p = deterministic_path(1.0, 0.5, 0.3, 40.0, 1e-3);
  const auto at = stage_stopping_time(p, 50.0);
  REQUIRE(at);
  const Vec2 est = stage_mle(p, 0.0, *at);
  CHECK(est.a == Approx(1.0).epsilon(1e-6));
  CHECK(est.b == Approx(0.5).epsilon(1e-6));
}

TEST_CASE("stage weight at the ergodic direction") {
  const Matrix2 F = ergodic_matrix_F(1.0, 0.5, 0.5);
  const double kappa = 7.0;
  const Matrix2 G = (kappa / F.trace()) * F;
  CHECK(stage_weight(G, kappa) == Approx(b_star_sq(1.0, 0.5, 0.5)).epsilon(1e-12));
}

TEST_CASE("stage count and aggregation") {
  const double w = 0.3;
  CHECK(stage_count(std::vector<double>(20, w), 2.0) == std::size_t{7});
  CHECK(stage_count({5.0, 1.0}, 2.0) == std::size_t{1});
  CHECK_FALSE(stage_count({0.1, 0.1}, 2.0));

  StageRecord s1, s2;
  s1.estimate = {1.0, 2.0};
  s1.weight_sq = 0.5;
  s2.estimate = {3.0, 4.0};
  s2.weight_sq = 0.5;
  CHECK(aggregated_estimate({s1}) == Vec2{1.0, 2.0});
  const Vec2 mean = aggregated_estimate({s1, s2});
  CHECK(mean.a == Approx(2.0));
  CHECK(mean.b == Approx(3.0));
  s2.multiplicity = 3;
  CHECK(aggregated_estimate({s1, s2}).a == Approx(2.5));
}

TEST_CASE("tiny horizon truncates") {
  Rng rng(2, 0);
  const PathRecord p = simulate_path(kRef, 5.0, 0.01, rng);
  const KappaSchedule s = KappaSchedule::make(1.0, u_star(ParamRegion::point(kRef)));
  const Outcome2d o = truncated_estimate_2d(p, 0.5, {1.0, 0.02, 2, 1.0}, s);
  CHECK(o.truncated);
  CHECK(o.estimate == Vec2{});
  CHECK(o.stop_time == 0.02);
  const Outcome2d c = truncated_estimate_2d(p, 0.5, {1.0, 1e4, 2, 1.0},
                                            KappaSchedule::make(1e4, 1.0));
  CHECK(c.censored);
}

TEST_CASE("small thresholds leave the first block underweighted") {
  // At kappa = 1 the design matrix is still close to singular, so the flat
  // block cannot reach H and the rule falls through to kappa_n = n^varpi.
  const KappaSchedule s = KappaSchedule::make(1.0, u_star(ParamRegion::point(kRef)));
  Rng rng = replicate_stream(91, 0);
  const PathRecord p = simulate_path(kRef, 400.0, 0.01, rng);
  const Outcome2d o = truncated_estimate_2d(p, 0.5, {1.0, 400.0, 2, 1.0}, s);
  REQUIRE_FALSE(o.stages.empty());
  CHECK(static_cast<double>(o.stages[0].multiplicity) * o.stages[0].weight_sq < 1.0);
  CHECK(o.truncated);
}

TEST_CASE("block folding matches stage-by-stage evaluation") {
  const double us = u_star(ParamRegion::point(kRef));
  int stopped = 0;
  for (double H : {40.0, 100.0, 200.0}) {
    const KappaSchedule s = KappaSchedule::make(H, us);
    for (int i = 0; i < 20; ++i) {
      Rng rng = replicate_stream(91, i);
      const PathRecord path = simulate_path(kRef, 400.0, 0.01, rng);
      const Outcome2d o = truncated_estimate_2d(path, kRef.sigma, {H, 400.0, 2, 1.0}, s);
      const Naive n = naive_2d(path, kRef.sigma, s, 400.0);
      CHECK(n.stopped == !o.truncated);
      if (!n.stopped) continue;
      ++stopped;
      CHECK(o.upsilon == n.upsilon);
      CHECK(o.stop_time == n.stop_time);
      CHECK(o.estimate.a == Approx(n.estimate.a).epsilon(1e-10));
      CHECK(o.estimate.b == Approx(n.estimate.b).epsilon(1e-10));
      CHECK(o.weight_sum >= H);
      double total = 0.0;
      for (const auto& st : o.stages) {
        CHECK(st.trace_residual <= 1e-12 * st.kappa);
        CHECK(st.weight_sq <= 1.0);
        total += static_cast<double>(st.multiplicity) * st.weight_sq;
      }
      CHECK(total - o.stages.back().weight_sq < H);
    }
  }
  MESSAGE("stopped before T in " << stopped << " of 60 runs");
  CHECK(stopped >= 20);
}

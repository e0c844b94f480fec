#include <cmath>
#include <vector>

#include "doctest.h"

#include "cirseq/bound_constants.hpp"
#include "cirseq/concentration.hpp"

using namespace cirseq;
using doctest::Approx;

namespace {
const ModelParams kRef{1.0, 0.5, 0.5, 2.0};
}

TEST_CASE("deviations on fixed paths") {
  const PathRecord flat = PathRecord::from_states(0.5, std::vector<double>(21, 2.0));
  CHECK(deviation_D(flat, 1.0, 0.5, 10.0) == Approx(0.0));
  CHECK(deviation_D(flat, 1.0, 0.5, 0.0) == 0.0);
  CHECK(clamped_inverse_integral(flat, 5.0, 10.0) == Approx(5.0));
  CHECK(clamped_inverse_integral(flat, 1.0, 10.0) == Approx(5.0));
  const PathRecord low = PathRecord::from_states(0.5, std::vector<double>(21, 0.1));
  CHECK(clamped_inverse_integral(low, 3.0, 10.0) == Approx(30.0));
  CHECK(deviation_Delta(low, 3.0, 10.0, 1.0) == Approx(20.0));
}

TEST_CASE("Poisson solution solves its ODE") {
  for (double r : {2.0, 5.0}) {
    const PoissonSolution y = PoissonSolution::clamped_inverse(kRef, r);
    CHECK(y.mu() == Approx(mu_a_theta(1.0, 0.5, 0.5, r)).epsilon(1e-10));
    double worst = 0.0, sup = 0.0;
    for (int i = 0; i < 25; ++i) {
      const double x = 0.05 * std::pow(400.0, i / 24.0);
      if (std::fabs(x - 1.0 / r) < 1e-3) continue;
      worst = std::max(worst, y.ode_residual(x));
      sup = std::max(sup, std::fabs(y(x)));
    }
    CHECK(worst < 1e-6);
    CHECK(sup <= y.sup_bound());
    // The two integral forms agree where both are valid.
    CHECK(poisson_solution(kRef, r, 1.2) == Approx(y(1.2)));
  }
  CHECK_THROWS(PoissonSolution::clamped_inverse(kRef, 0.5));
}

TEST_CASE("constant phi has zero corrector") {
  const PoissonSolution y(kRef, [](double) { return 0.7; }, 0.7);
  CHECK(y.mu() == Approx(0.7).epsilon(1e-12));
  for (double x : {0.2, 1.0, 1.5, 4.0}) CHECK(std::fabs(y(x)) < 1e-12);
}

TEST_CASE("smooth phi away from the kink") {
  const PoissonSolution y(kRef, [](double x) { return std::exp(-x); }, 1.0);
  for (double x : {0.3, 1.0, 1.5, 3.0, 8.0}) CHECK(y.ode_residual(x) < 1e-6);
}

TEST_CASE("moment checks need enough replicates") {
  const ParamRegion g = ParamRegion::point(kRef);
  const MomentCheck one = verify_D_bound(kRef, g, 1, 10.0, 1, 3);
  CHECK(one.verdict == Verdict::Insufficient);
  CHECK(to_string(one.verdict) == "insufficient replicates");
  const MomentCheck many = verify_D_bound(kRef, g, 1, 10.0, 200, 3);
  CHECK(many.verdict == Verdict::Pass);
  CHECK(many.bound == Approx(d_moment_bound(g, 1)));
}

TEST_CASE("deviations are centred") {
  DeviationStudyConfig cfg;
  cfg.params = kRef;
  cfg.region = ParamRegion::point(kRef);
  cfg.horizons = {50.0};
  cfg.orders_D = {1};
  cfg.orders_Delta = {1};
  cfg.replicates = 400;
  cfg.seed = 17;
  cfg.threads = 2;
  const auto checks = deviation_study(cfg);
  REQUIRE(checks.size() == 2);
  for (const auto& c : checks) CHECK(c.verdict == Verdict::Pass);

  std::vector<double> d(400);
  for (std::size_t i = 0; i < d.size(); ++i) {
    Rng rng = replicate_stream(17, i);
    ModelParams p = kRef;
    p.x0 = sample_stationary(kRef, rng);
    d[i] = deviation_D(simulate_path(p, 50.0, 0.01, rng), 1.0, 0.5, 50.0);
  }
  const MeanSummary s = summarize(d);
  CHECK(std::fabs(s.mean) < 3.0 * s.se);
  // E D^2 / T equals the first summary above.
  std::vector<double> sq(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) sq[i] = d[i] * d[i] / 50.0;
  CHECK(summarize(sq).mean == Approx(checks[0].empirical.mean).epsilon(1e-12));
}

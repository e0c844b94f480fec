#include "cirseq/bound_constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cirseq/quadrature.hpp"

namespace cirseq {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::vector<double> linspace(double lo, double hi, int n) {
  if (lo == hi || n < 2) return {lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

double ipow(double x, int n) {
  double result = 1.0;
  for (int i = 0; i < n; ++i) result *= x;
  return result;
}

void require_order(int m, int min_m, const char* where) {
  if (m < min_m) {
    std::ostringstream os;
    os << where << ": moment order m must be >= " << min_m << ", got " << m;
    fail(os.str());
  }
}

}  // namespace

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::B: return "b";
    case Procedure::A: return "a";
    case Procedure::TwoD: return "2d";
  }
  return "?";
}

void ParamRegion::validate() const {
  if (!(sigma > 0.0)) fail("sigma > 0 required");
  if (!(x0 > 0.0)) fail("x0 > 0 required");
  if (!(a_min > 0.0) || !(a_min <= a_max)) fail("0 < a_min <= a_max required");
  if (!(b_min > 0.0) || !(b_min <= b_max)) fail("0 < b_min <= b_max required");
}

void ParamRegion::validate(Procedure procedure) const {
  validate();
  switch (procedure) {
    case Procedure::B:
      if (a_min != a_max) fail("b procedure: a is known, so a_min must equal a_max");
      break;
    case Procedure::A:
      if (b_min != b_max) fail("a procedure: b is known, so b_min must equal b_max");
      if (!(a_min > sigma / 2.0)) fail("a procedure: Theta must lie in (sigma/2, inf): a_min > sigma/2");
      break;
    case Procedure::TwoD:
      if (!(a_min > sigma / 2.0)) fail("2d procedure: Theta must lie in (sigma/2, inf) x (0, inf): a_min > sigma/2");
      break;
  }
}

// ---------------------------------------------------------------------------

double transient_moment(const ModelParams& params, double t, double q) {
  const double alpha = params.alpha();
  if (!(q > -alpha)) fail("E X_t^q is finite only for q > -2a/sigma");
  if (t <= 0.0) return std::pow(params.x0, q);
  if (std::isinf(t)) return stationary_moment(params, q);

  const double scale = -params.sigma * std::expm1(-params.b * t) / (4.0 * params.b);
  const double half_dof = 2.0 * params.a / params.sigma;
  const double nu = 0.5 * params.x0 * std::exp(-params.b * t) / scale;

  // chi'^2(d, 2 nu) = chi^2(d + 2N), N ~ Poisson(nu); E chi^2(k)^q = 2^q Gamma(k/2 + q) / Gamma(k/2).
  auto term = [&](double j) {
    const double log_weight = nu > 0.0 ? -nu + j * std::log(nu) - std::lgamma(j + 1.0) : 0.0;
    return std::exp(log_weight + std::lgamma(half_dof + j + q) - std::lgamma(half_dof + j));
  };
  double sum = 0.0;
  if (nu < 1e-300) {
    sum = term(0.0);
  } else {
    const double width = 12.0 * std::sqrt(nu) + 40.0;
    const double lo = std::max(0.0, std::floor(nu - width));
    const double hi = std::ceil(nu + width);
    for (double j = lo; j <= hi; j += 1.0) sum += term(j);
  }
  return std::pow(2.0 * scale, q) * sum;
}

double moment_envelope(const ParamRegion& region, double q) {
  region.validate();
  if (!(q > -region.alpha_min())) {
    std::ostringstream os;
    os << "moment envelope of order " << q << " diverges: need q > -2 a_min / sigma = "
       << -region.alpha_min();
    throw std::domain_error(os.str());
  }
  std::vector<double> times{0.0};
  for (double t = 0.1; t <= 50.0; t *= 2.0) times.push_back(t);
  times.push_back(50.0);
  times.push_back(std::numeric_limits<double>::infinity());

  double sup = 0.0;
  for (double a : linspace(region.a_min, region.a_max, 3)) {
    for (double b : linspace(region.b_min, region.b_max, 3)) {
      const ModelParams p = region.at(a, b);
      for (double t : times) sup = std::max(sup, transient_moment(p, t, q));
    }
  }
  return kEnvelopeSafety * sup;
}

// ---------------------------------------------------------------------------

double L_m(const ParamRegion& region, int m) {
  require_order(m, 1, "L_m");
  const double x2m = moment_envelope(region, 2.0 * m);
  const double xm = moment_envelope(region, m);
  return ipow(3.0, 2 * m - 1) *
         (2.0 * x2m + ipow(region.sigma, m) * ipow(m * (2.0 * m - 1.0), m) * xm);
}

double U_m(const ParamRegion& region, int m) {
  return L_m(region, m) * region.b_max * region.b_max / ipow(region.b_min, 2 * m);
}

double corrector_bracket(double alpha, double beta) {
  return 4.0 * std::exp(beta) / alpha +
         std::exp(alpha * std::log(2.0) + std::lgamma(alpha) - alpha * std::log(beta)) +
         std::exp(alpha * std::log(2.0)) / beta;
}

GammaRange gamma_range(double lo, double hi) {
  if (!(lo > 0.0) || !(lo <= hi)) fail("gamma_range needs 0 < lo <= hi");
  GammaRange range{std::tgamma(lo), std::tgamma(lo)};
  auto visit = [&](double x) {
    const double g = std::tgamma(x);
    range.min = std::min(range.min, g);
    range.max = std::max(range.max, g);
  };
  for (double x : linspace(lo, hi, 2001)) visit(x);
  if (lo < kGammaArgMin && kGammaArgMin < hi) visit(kGammaArgMin);
  return range;
}

double V_m(const ParamRegion& region, int m) {
  region.validate(Procedure::A);
  const double alpha_min = region.alpha_min();
  const double alpha_max = region.alpha_max();
  const double beta = region.beta_min();
  const GammaRange g = gamma_range(alpha_min, alpha_max);
  const double bracket = 4.0 * std::exp(beta) / alpha_min +
                         std::pow(2.0, alpha_max) * g.max /
                             std::min(std::pow(beta, alpha_min), std::pow(beta, alpha_max)) +
                         std::pow(2.0, alpha_max) / beta;
  return region.a_max * region.a_max * L_m(region, m) / ipow(region.sigma, 2 * m) *
         ipow(bracket, 2 * m);
}

double Z_m(const ParamRegion& region, int m) {
  region.validate(Procedure::TwoD);
  const double alpha_min = region.alpha_min();
  const double alpha_max = region.alpha_max();
  const double beta_min = region.beta_min();
  const GammaRange g = gamma_range(alpha_min, alpha_max);
  const double bracket =
      4.0 * std::exp(region.beta_max()) / alpha_min +
      std::pow(2.0, alpha_max) * g.max /
          std::min(std::pow(beta_min, alpha_min), std::pow(beta_min, alpha_max)) +
      std::pow(2.0, alpha_max) / beta_min;
  return ipow(2.0, 2 * m) * L_m(region, m) *
         (1.0 / ipow(region.b_min, 2 * m) + ipow(bracket, 2 * m) / ipow(region.sigma, 2 * m));
}

// ---------------------------------------------------------------------------

double mu_a_theta(double a, double b, double sigma, double r) {
  if (!(a > sigma / 2.0)) fail("mu_a_theta needs a > sigma/2");
  if (!(r >= 1.0)) fail("mu_a_theta needs clamp level r >= 1");
  const ModelParams p{a, b, sigma, 1.0};
  const double alpha = p.alpha();
  const double beta = p.beta();
  const double cutoff = gamma_upper_cutoff(alpha, beta);
  const double kink = 1.0 / r;
  auto integrand = [&](double z) {
    if (z <= 0.0) return 0.0;
    return std::min(1.0 / z, r) * stationary_density(p, z);
  };
  const double mode = (alpha - 1.0) / beta;
  const double spread = std::sqrt(alpha) / beta;
  return integrate_split(integrand, 0.0, cutoff,
                         {kink, mode, mode + 4.0 * spread, std::max(0.0, mode - 4.0 * spread)});
}

double mu_a_star(const ParamRegion& region, double r) {
  region.validate(Procedure::A);
  double inf = std::numeric_limits<double>::infinity();
  for (double a : linspace(region.a_min, region.a_max, 17)) {
    inf = std::min(inf, mu_a_theta(a, region.b_min, region.sigma, r));
  }
  return inf;
}

double mu_theta(double a, double b, double sigma, double r) {
  return a / b + mu_a_theta(a, b, sigma, r);
}

double mu_star(const ParamRegion& region, double r) {
  region.validate(Procedure::TwoD);
  double inf = std::numeric_limits<double>::infinity();
  for (double a : linspace(region.a_min, region.a_max, 9)) {
    for (double b : linspace(region.b_min, region.b_max, 9)) {
      inf = std::min(inf, mu_theta(a, b, region.sigma, r));
    }
  }
  return inf;
}

double trace_F_min(const ParamRegion& region) {
  region.validate(Procedure::TwoD);
  double inf = std::numeric_limits<double>::infinity();
  for (double a : linspace(region.a_min, region.a_max, 21)) {
    for (double b : linspace(region.b_min, region.b_max, 21)) {
      inf = std::min(inf, ergodic_matrix_F(a, b, region.sigma).trace());
    }
  }
  return inf;
}

double u_r(const ParamRegion& region, double b) {
  const double alpha_min = region.alpha_min();
  if (!(alpha_min > 1.0)) fail("u_r needs alpha_min = 2 a_min / sigma > 1");
  const double beta = 2.0 * b / region.sigma;
  const GammaRange g = gamma_range(alpha_min, region.alpha_max());
  return std::max(std::pow(beta, alpha_min), std::pow(beta, region.alpha_max())) /
         (g.min * (alpha_min - 1.0));
}

double r_threshold(const ParamRegion& region, double b, double T, double delta) {
  region.validate();
  const double alpha_min = region.alpha_min();
  if (!(alpha_min > 1.0)) fail("r_threshold needs alpha_min > 1, i.e. a_min > sigma/2");
  if (!(T >= 1.0)) fail("r_threshold needs T >= 1");
  if (!(delta > 0.0 && delta < 0.5)) fail("r_threshold needs 0 < delta < 1/2");
  const double eps = std::pow(T, -delta * (alpha_min - 1.0));
  const double base = (2.0 * region.a_max - region.sigma) * u_r(region, b) / (2.0 * b * eps);
  return std::max(1.0, std::pow(base, 1.0 / (alpha_min - 1.0)));
}

double r_threshold_2d(const ParamRegion& region, double T, double delta) {
  return std::max(r_threshold(region, region.b_min, T, delta),
                  r_threshold(region, region.b_max, T, delta));
}

double fisher_info(FisherCase which, double theta, double fixed_other, double sigma) {
  switch (which) {
    case FisherCase::EstimateB:
      if (!(theta > 0.0)) fail("Fisher information for b needs theta > 0");
      return fixed_other / (sigma * theta);
    case FisherCase::EstimateA:
      if (!(theta > sigma / 2.0)) fail("Fisher information for a needs theta > sigma/2");
      return 2.0 * fixed_other / (sigma * (2.0 * theta - sigma));
  }
  return 0.0;
}

Matrix2 ergodic_matrix_F(double a, double b, double sigma) {
  if (!(a > sigma / 2.0)) fail("F(theta) needs a > sigma/2");
  if (!(b > 0.0)) fail("F(theta) needs b > 0");
  return {2.0 * b / (2.0 * a - sigma), -1.0, a / b};
}

double b_star_sq(double a, double b, double sigma) {
  const Matrix2 F = ergodic_matrix_F(a, b, sigma);
  const double k = F.inverse().frobenius() * F.trace();
  return 1.0 / (k * k);
}

double u_star(const ParamRegion& region) {
  region.validate(Procedure::TwoD);
  double sup = 0.0;
  for (double a : linspace(region.a_min, region.a_max, 21)) {
    for (double b : linspace(region.b_min, region.b_max, 21)) {
      sup = std::max(sup, 1.0 / b_star_sq(a, b, region.sigma));
    }
  }
  return sup;
}

double rho_star(double n_star, double varpi) {
  if (!(varpi > 1.0)) fail("kappa growth exponent varpi must exceed 1");
  if (!(n_star > 0.0)) fail("n*_H must be positive");
  return std::pow(n_star, 1.0 - varpi) / (varpi - 1.0);
}

// ---------------------------------------------------------------------------

namespace {

void require_threshold(double H, double rate, double T, const char* inequality) {
  if (!(H > 0.0) || !(H < rate * T)) {
    std::ostringstream os;
    os << "threshold H = " << H << " violates " << inequality << " (upper limit " << rate * T
       << ")";
    throw std::domain_error(os.str());
  }
}

}  // namespace

AccuracyBreakdown accuracy_b(const ParamRegion& region, double H, double T, int m) {
  region.validate(Procedure::B);
  require_order(m, 2, "accuracy_b");
  if (!(T >= 1.0)) fail("accuracy_b needs T >= 1");
  const double rate = region.a_star();
  require_threshold(H, rate, T, "0 < H < a_* T");
  return {region.sigma / H, std::pow(T, m) * U_m(region, m) / ipow(rate * T - H, 2 * m), 0.0};
}

AccuracyBreakdown accuracy_a(const ParamRegion& region, double H, double T, int m, double r) {
  region.validate(Procedure::A);
  require_order(m, 2, "accuracy_a");
  if (!(T > 0.0)) fail("accuracy_a needs T > 0");
  if (!(r >= 1.0)) fail("accuracy_a needs r >= 1");
  const double rate = mu_a_star(region, r);
  require_threshold(H, rate, T, "0 < H < mu_{a,*} T");
  return {region.sigma / H,
          std::pow(T, m) * ipow(r, 2 * m) * V_m(region, m) / ipow(rate * T - H, 2 * m), 0.0};
}

AccuracyBreakdown accuracy_2d(const ParamRegion& region, double H, double T, int m, double r,
                              double v_star, double rho_star_value) {
  region.validate(Procedure::TwoD);
  require_order(m, 2, "accuracy_2d");
  if (!(r >= 1.0)) fail("accuracy_2d needs r >= 1");
  const double rate = mu_star(region, r);
  if (!(T > 1.0 / rate)) fail("accuracy_2d needs T > 1/mu_*");
  if (!(H >= 1.0)) throw std::domain_error("accuracy_2d needs H >= 1");
  require_threshold(H, rate, T, "1 <= H < mu_* T");
  const double theta_max = region.theta_max_sq();
  return {(2.0 * u_star(region) + rho_star_value) * region.sigma / H,
          std::pow(T, m) * theta_max * ipow(r, 2 * m) * Z_m(region, m) /
              ipow(rate * T - H, 2 * m),
          ipow(2.0, 4 * m + 1) * v_star * theta_max / ipow(H, 2 * m)};
}

double tail_bound_b(const ParamRegion& region, double H, double T, int m) {
  region.validate(Procedure::B);
  const double rate = region.a_star();
  require_threshold(H, rate, T, "0 < H < a_* T");
  return std::pow(T, m) * L_m(region, m) /
         (ipow(rate * T - H, 2 * m) * ipow(region.b_min, 2 * m));
}

double tail_bound_a(const ParamRegion& region, double H, double T, int m, double r) {
  region.validate(Procedure::A);
  const double rate = mu_a_star(region, r);
  require_threshold(H, rate, T, "0 < H < mu_{a,*} T");
  return std::pow(T, m) * ipow(r, 2 * m) * V_m(region, m) /
         (region.a_max * region.a_max * ipow(rate * T - H, 2 * m));
}

TailBound2d tail_bound_2d(const ParamRegion& region, double H, double T, int m, double r,
                          double v_star) {
  region.validate(Procedure::TwoD);
  const double rate = mu_star(region, r);
  require_threshold(H, rate, T, "1 <= H < mu_* T");
  return {std::pow(T, m) * ipow(r, 2 * m) * Z_m(region, m) / ipow(rate * T - H, 2 * m),
          ipow(2.0, 4 * m + 1) * v_star / ipow(H, 2 * m)};
}

double delta_moment_bound(const ParamRegion& region, int m, double phi_sup) {
  require_order(m, 1, "delta_moment_bound");
  double sup = 0.0;
  for (double a : linspace(region.a_min, region.a_max, 9)) {
    for (double b : linspace(region.b_min, region.b_max, 9)) {
      const ModelParams p = region.at(a, b);
      sup = std::max(sup, corrector_bracket(p.alpha(), p.beta()));
    }
  }
  return ipow(phi_sup / region.sigma, 2 * m) * L_m(region, m) * ipow(sup, 2 * m);
}

double d_moment_bound(const ParamRegion& region, int m) {
  return L_m(region, m) / ipow(region.b_min, 2 * m);
}

// ---------------------------------------------------------------------------

double ThresholdProblem::value(double H) const {
  return stat_coef / H + trunc_coef * std::pow(T, m) / ipow(upper() - H, 2 * m);
}

double ThresholdProblem::derivative(double H) const {
  return -stat_coef / (H * H) +
         2.0 * m * trunc_coef * std::pow(T, m) / ipow(upper() - H, 2 * m + 1);
}

double ThresholdProblem::fixed_point_coef() const {
  return std::pow(2.0 * m * trunc_coef / stat_coef, 1.0 / (2.0 * m + 1.0));
}

double ThresholdProblem::fixed_point_map(double H) const {
  const double p = 2.0 / (2.0 * m + 1.0);
  const double q = m / (2.0 * m + 1.0);
  return upper() - fixed_point_coef() * std::pow(H, p) * std::pow(T, q);
}

double ThresholdProblem::residual(double H) const {
  using ld = long double;
  const ld p = 2.0L / (2.0L * m + 1.0L);
  const ld q = static_cast<ld>(m) / (2.0L * m + 1.0L);
  const ld c = std::pow(2.0L * m * static_cast<ld>(trunc_coef) / static_cast<ld>(stat_coef),
                        1.0L / (2.0L * m + 1.0L));
  const ld g = static_cast<ld>(H) - static_cast<ld>(rate) * static_cast<ld>(T) +
               c * std::pow(static_cast<ld>(H), p) * std::pow(static_cast<ld>(T), q);
  return static_cast<double>(std::fabs(g));
}

ThresholdProblem threshold_problem(Procedure procedure, const ParamRegion& region, double T,
                                   int m, double r) {
  region.validate(procedure);
  require_order(m, 2, "optimal_threshold");
  if (!(T > 0.0)) fail("optimal_threshold needs T > 0");
  ThresholdProblem problem;
  problem.m = m;
  problem.T = T;
  switch (procedure) {
    case Procedure::B:
      problem.rate = region.a_star();
      problem.stat_coef = region.sigma;
      problem.trunc_coef = U_m(region, m);
      break;
    case Procedure::A:
      problem.rate = mu_a_star(region, r);
      problem.stat_coef = region.sigma;
      problem.trunc_coef = ipow(r, 2 * m) * V_m(region, m);
      break;
    case Procedure::TwoD:
      problem.rate = mu_star(region, r);
      problem.stat_coef = 2.0 * u_star(region) * region.sigma;
      problem.trunc_coef = region.theta_max_sq() * ipow(r, 2 * m) * Z_m(region, m);
      break;
  }
  return problem;
}

ThresholdSolution optimal_threshold(const ThresholdProblem& problem, std::size_t grid_points) {
  if (!(problem.rate > 0.0) || !(problem.T > 0.0) || !(problem.stat_coef > 0.0) ||
      !(problem.trunc_coef > 0.0)) {
    fail("optimal_threshold: degenerate accuracy function");
  }
  ThresholdSolution sol;
  const double upper = problem.upper();
  const int m = problem.m;
  const double p = 2.0 / (2.0 * m + 1.0);
  const double c = problem.fixed_point_coef();

  // Asymptotic bracket around H*.
  const double K = c * std::pow(problem.rate, p);
  const double lead = K * std::pow(problem.T, (2.0 + m) / (2.0 * m + 1.0));
  sol.bracket_lower = upper - lead;
  const double omega = lead / upper;
  sol.bracket_valid = omega < 1.0;
  sol.bracket_upper = sol.bracket_valid ? upper - lead * std::pow(1.0 - omega, p) : upper;

  // Damped fixed-point iteration; damping 1/(1 - phi'(H)) keeps the step contractive.
  double H = sol.bracket_valid ? sol.bracket_lower : 0.5 * upper;
  const double q = m / (2.0 * m + 1.0);
  for (int it = 1; it <= 10000; ++it) {
    const double slope = -c * p * std::pow(H, p - 1.0) * std::pow(problem.T, q);
    const double damping = 1.0 / (1.0 - slope);
    double next = H + damping * (problem.fixed_point_map(H) - H);
    next = std::clamp(next, 0.5 * H, 0.5 * (H + upper));
    sol.fixed_point_iterations = it;
    if (std::fabs(next - H) <= 1e-13 * upper) {
      H = next;
      sol.fixed_point_converged = true;
      break;
    }
    H = next;
  }
  sol.fixed_point_H = H;

  // Bisection on g(H) = H - phi(H), increasing from -rate T at 0 to > 0 at rate T.
  double lo = 0.0;
  double hi = upper;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g = mid - problem.fixed_point_map(mid);
    if (g < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r_lo = lo > 0.0 ? problem.residual(lo) : std::numeric_limits<double>::infinity();
  const double r_hi = problem.residual(hi);
  sol.H = r_lo < r_hi ? lo : hi;
  // Prefer the fixed-point answer when it is at least as accurate.
  if (sol.fixed_point_converged && sol.fixed_point_H > 0.0 && sol.fixed_point_H < upper &&
      problem.residual(sol.fixed_point_H) < std::min(r_lo, r_hi)) {
    sol.H = sol.fixed_point_H;
  }
  sol.residual = problem.residual(sol.H);

  if (grid_points > 0) {
    sol.grid_cell = upper / static_cast<double>(grid_points + 1);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= grid_points; ++i) {
      const double h = sol.grid_cell * static_cast<double>(i);
      const double v = problem.value(h);
      if (v < best) {
        best = v;
        sol.grid_H = h;
      }
    }
  }
  return sol;
}

ThresholdSolution optimal_threshold(Procedure procedure, const ParamRegion& region, double T,
                                    int m, double r) {
  return optimal_threshold(threshold_problem(procedure, region, T, m, r));
}

}  // namespace cirseq

#pragma once

#include <cstddef>
#include <string>

#include "cirseq/cir_process.hpp"
#include "cirseq/linalg2.hpp"

namespace cirseq {

enum class Procedure { B, A, TwoD };

std::string to_string(Procedure p);

/// Compact parameter rectangle [a_min, a_max] x [b_min, b_max] with the
/// shared diffusion scale and initial state. A degenerate side means that
/// coordinate is known.
struct ParamRegion {
  double a_min = 1.0;
  double a_max = 1.0;
  double b_min = 0.5;
  double b_max = 0.5;
  double sigma = 0.5;
  double x0 = 1.0;

  static ParamRegion point(const ModelParams& params) {
    return {params.a, params.a, params.b, params.b, params.sigma, params.x0};
  }

  double alpha_min() const { return 2.0 * a_min / sigma; }
  double alpha_max() const { return 2.0 * a_max / sigma; }
  double beta_min() const { return 2.0 * b_min / sigma; }
  double beta_max() const { return 2.0 * b_max / sigma; }
  /// max |theta|^2 over the rectangle.
  double theta_max_sq() const { return a_max * a_max + b_max * b_max; }
  /// a / b_max, the worst-case rate of int X ds when b is estimated.
  double a_star() const { return a_min / b_max; }

  ModelParams at(double a, double b) const { return {a, b, sigma, x0}; }

  /// Throws std::invalid_argument naming the violated requirement. The
  /// procedure selects the extra hypotheses: known a for B, known b and
  /// a_min > sigma/2 for A, a_min > sigma/2 for TwoD.
  void validate(Procedure procedure) const;
  /// Basic ordering and positivity only.
  void validate() const;
};

struct AccuracyBreakdown {
  double statistical_term = 0.0;
  double truncation_term = 0.0;
  double stage_tail_term = 0.0;

  double total() const { return statistical_term + truncation_term + stage_tail_term; }
};

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Exact E X_t^q for X_0 = params.x0, from the Poisson mixture
/// representation of the noncentral chi-square law. Requires q > -alpha.
double transient_moment(const ModelParams& params, double t, double q);

/// Upper estimate of sup_t sup_Theta E X_t^q: maximum over the 3x3
/// corner/midpoint grid of Theta and the time grid {0, 0.1 * 2^k <= 50, 50,
/// infinity}, inflated by 1.05.
double moment_envelope(const ParamRegion& region, double q);

inline constexpr double kEnvelopeSafety = 1.05;

// ---------------------------------------------------------------------------
// Threshold constants
// ---------------------------------------------------------------------------

double L_m(const ParamRegion& region, int m);
/// L_m b_max^2 / b_min^{2m}.
double U_m(const ParamRegion& region, int m);
/// Constant of the truncation term when a is estimated with b known.
double V_m(const ParamRegion& region, int m);
/// Constant of the truncation term of the two-dimensional procedure.
double Z_m(const ParamRegion& region, int m);

/// 4 e^beta / alpha + 2^alpha Gamma(alpha) / beta^alpha + 2^alpha / beta.
/// Bounds sigma * sup|y| / phi_* for the Poisson-equation corrector y.
double corrector_bracket(double alpha, double beta);

struct GammaRange {
  double min = 0.0;
  double max = 0.0;
};

/// Extremes of the Gamma function over [lo, hi], including the interior
/// minimum near 1.4616 when the interval straddles it.
GammaRange gamma_range(double lo, double hi);

inline constexpr double kGammaArgMin = 1.4616321449683623;

// ---------------------------------------------------------------------------
// Ergodic functionals
// ---------------------------------------------------------------------------

/// Stationary mean of min(1/X, r) for X ~ Gamma(2a/sigma, 2b/sigma).
double mu_a_theta(double a, double b, double sigma, double r);
/// Infimum of mu_a_theta over a in [a_min, a_max] with the known b.
double mu_a_star(const ParamRegion& region, double r);
/// a/b + mu_a_theta(a, b, sigma, r).
double mu_theta(double a, double b, double sigma, double r);
/// Infimum of mu_theta over the rectangle.
double mu_star(const ParamRegion& region, double r);
/// Minimum of tr F over the rectangle.
double trace_F_min(const ParamRegion& region);

/// (beta^{alpha_min} v beta^{alpha_max}) / (Gamma_min (alpha_min - 1)) for beta = 2b/sigma.
double u_r(const ParamRegion& region, double b);
/// Clamp level r making mu_{a,*} >= (1 - eps) 2b/(2a_max - sigma) with
/// eps = T^{-delta (alpha_min - 1)}. Clamped below at 1.
double r_threshold(const ParamRegion& region, double b, double T, double delta);
/// Largest r_threshold over the two b-edges of the rectangle.
double r_threshold_2d(const ParamRegion& region, double T, double delta);

enum class FisherCase {
  EstimateB,  ///< I_a(theta) = a / (sigma theta), theta = b, other = a
  EstimateA,  ///< I_b(theta) = 2b / (sigma (2 theta - sigma)), theta = a, other = b
};

double fisher_info(FisherCase which, double theta, double fixed_other, double sigma);

/// F(theta) = [[2b/(2a - sigma), -1], [-1, a/b]].
Matrix2 ergodic_matrix_F(double a, double b, double sigma);
/// 1 / (|F^{-1}| tr F)^2 with the Frobenius norm.
double b_star_sq(double a, double b, double sigma);
/// max over the rectangle of (|F^{-1}| tr F)^2.
double u_star(const ParamRegion& region);

/// Tail sum of 1/n^varpi beyond n_star, bounded by n_star^{1 - varpi} / (varpi - 1).
double rho_star(double n_star, double varpi);

// ---------------------------------------------------------------------------
// Accuracy functions and truncation-probability bounds
// ---------------------------------------------------------------------------

AccuracyBreakdown accuracy_b(const ParamRegion& region, double H, double T, int m);
AccuracyBreakdown accuracy_a(const ParamRegion& region, double H, double T, int m, double r);
AccuracyBreakdown accuracy_2d(const ParamRegion& region, double H, double T, int m, double r,
                              double v_star, double rho_star_value);

/// Bound on sup P(tau_H > T) for the b procedure.
double tail_bound_b(const ParamRegion& region, double H, double T, int m);
/// Bound on sup P(tau_H > T) for the a procedure.
double tail_bound_a(const ParamRegion& region, double H, double T, int m, double r);

struct TailBound2d {
  double deviation_term = 0.0;  ///< P(int (X + phi(X)) ds < H) part
  double stage_term = 0.0;      ///< P(upsilon_H > n*_H) part
  double total() const { return deviation_term + stage_term; }
};

TailBound2d tail_bound_2d(const ParamRegion& region, double H, double T, int m, double r,
                          double v_star);

/// Theorem-style constant bounding E Delta_T(phi)^{2m} / T^m for |phi| <= phi_sup.
double delta_moment_bound(const ParamRegion& region, int m, double phi_sup);
/// L_m / b_min^{2m}, bounding E D_T^{2m} / T^m.
double d_moment_bound(const ParamRegion& region, int m);

// ---------------------------------------------------------------------------
// Optimal threshold
// ---------------------------------------------------------------------------

/// e(H) = stat_coef / H + trunc_coef T^m / (rate T - H)^{2m} on (0, rate T).
struct ThresholdProblem {
  double rate = 0.0;
  double stat_coef = 0.0;
  double trunc_coef = 0.0;
  int m = 2;
  double T = 0.0;

  double upper() const { return rate * T; }
  double value(double H) const;
  double derivative(double H) const;
  /// Coefficient c in the first-order condition H = rate T - c H^{2/(2m+1)} T^{m/(2m+1)}.
  double fixed_point_coef() const;
  /// rate T - c H^{2/(2m+1)} T^{m/(2m+1)}.
  double fixed_point_map(double H) const;
  /// |H - fixed_point_map(H)| evaluated in extended precision.
  double residual(double H) const;
};

ThresholdProblem threshold_problem(Procedure procedure, const ParamRegion& region, double T,
                                   int m, double r);

struct ThresholdSolution {
  double H = 0.0;
  double residual = 0.0;
  /// Damped fixed-point iteration seeded at the closed asymptotic form.
  double fixed_point_H = 0.0;
  int fixed_point_iterations = 0;
  bool fixed_point_converged = false;
  /// Asymptotic bracket [lower, upper] around H*; valid only when lower > 0.
  double bracket_lower = 0.0;
  double bracket_upper = 0.0;
  bool bracket_valid = false;
  /// Brute-force argmin of e(H) on a uniform grid over (0, rate T).
  double grid_H = 0.0;
  double grid_cell = 0.0;
};

/// Minimises e(H). The returned H solves the first-order condition by
/// bisection to the last ulp; the fixed-point and grid answers are kept for
/// cross-checking. Throws if the problem is degenerate.
ThresholdSolution optimal_threshold(const ThresholdProblem& problem,
                                    std::size_t grid_points = 100000);

ThresholdSolution optimal_threshold(Procedure procedure, const ParamRegion& region, double T,
                                    int m, double r);

}  // namespace cirseq

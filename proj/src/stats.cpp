#include "cirseq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cirseq/rng.hpp"

namespace cirseq {

namespace {

double mean_of(std::span<const double> values) {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

}  // namespace

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  CompensatedSum s;
  for (double v : values) s.add((v - mean) * (v - mean));
  return s.value() / static_cast<double>(values.size() - 1);
}

MeanSummary summarize(std::span<const double> values) {
  MeanSummary out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = mean_of(values);
  if (values.size() < 2) {
    out.upper99 = out.lower99 = out.mean;
    return out;
  }
  CompensatedSum m2;
  CompensatedSum m4;
  for (double v : values) {
    const double d2 = (v - out.mean) * (v - out.mean);
    m2.add(d2);
    m4.add(d2 * d2);
  }
  const auto n = static_cast<double>(values.size());
  const double var = m2.value() / (n - 1.0);
  out.sd = std::sqrt(var);
  out.se = out.sd / std::sqrt(n);
  const double pop_var = m2.value() / n;
  out.excess_kurtosis = pop_var > 0.0 ? (m4.value() / n) / (pop_var * pop_var) - 3.0 : 0.0;
  out.upper99 = out.mean + kZ99 * out.se;
  out.lower99 = out.mean - kZ99 * out.se;
  return out;
}

MeanSummary summarize_guarded(std::span<const double> values, std::uint64_t seed) {
  MeanSummary out = summarize(values);
  if (out.n < 2 || !(out.excess_kurtosis > kKurtosisGuard)) return out;

  constexpr int kResamples = 2000;
  Rng rng(seed, 0xB00757A9ull);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(kResamples);
  for (auto& m : means) {
    CompensatedSum s;
    for (std::size_t i = 0; i < values.size(); ++i) s.add(values[pick(rng)]);
    m = s.value() / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const auto hi = static_cast<std::size_t>(std::ceil(0.99 * kResamples)) - 1;
  const auto lo = static_cast<std::size_t>(std::floor(0.01 * kResamples));
  out.upper99 = std::max(out.upper99, means[hi]);
  out.lower99 = std::min(out.lower99, means[lo]);
  out.ci_method = "bootstrap";
  return out;
}

Proportion wilson(std::size_t successes, std::size_t n, double z) {
  Proportion out;
  out.successes = successes;
  out.n = n;
  if (n == 0) {
    out.upper99 = 1.0;
    return out;
  }
  const auto nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  out.p = p;
  out.lower99 = std::max(0.0, centre - half);
  out.upper99 = std::min(1.0, centre + half);
  return out;
}

}  // namespace cirseq

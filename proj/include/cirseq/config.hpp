#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cirseq/bound_constants.hpp"
#include "cirseq/harness.hpp"

namespace cirseq {

/// Carries every violated requirement found while loading a config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines. '#' starts a comment; blank lines are skipped.
/// Duplicate or malformed lines raise ConfigError.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

struct ExperimentConfig {
  ModelParams model;
  ParamRegion region;
  ProcedureKind procedure = ProcedureKind::B;
  double T = 100.0;
  int m = 2;
  double delta = 0.25;  ///< exponent of the clamp level r = O(T^delta)
  double varpi = 1.5;
  double v_star = 1.0;
  std::optional<double> H;  ///< empty: use the optimal threshold
  std::optional<double> r;  ///< empty: use the r threshold
  double step = 0.01;
  std::size_t replicates = 1000;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  bool stationary_start = false;
  bool verbose_stages = false;
  std::string out_json;
  std::string out_csv;

  /// Procedure of the guaranteed bound; mle-b and mle-a map to B and A.
  Procedure bound_procedure() const;
};

inline constexpr const char* kKnownKeys[] = {
    "a", "b", "sigma", "x0", "a_min", "a_max", "b_min", "b_max", "procedure", "T", "m",
    "delta", "varpi", "v_star", "H", "r", "step", "replicates", "seed", "threads",
    "stationary_start", "verbose_stages", "out_json", "out_csv"};

/// Builds and validates a config. Later maps override earlier ones. Every
/// violated precondition is collected before ConfigError is thrown.
ExperimentConfig make_config(const std::vector<KeyValues>& layers);

/// Names each violated requirement; empty when the config is usable.
std::vector<std::string> validate(const ExperimentConfig& config);

}  // namespace cirseq

#include "cirseq/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cirseq {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  std::optional<std::string> raw(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
  }

  void real(const std::string& key, double& target) {
    if (auto v = real(key)) target = *v;
  }
  std::optional<double> real(const std::string& key) {
    const auto s = raw(key);
    if (!s) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s->c_str(), &end);
    if (end == s->c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
      problems.push_back(key + ": '" + *s + "' is not a finite number");
      return std::nullopt;
    }
    return v;
  }

  template <typename Int>
  void integer(const std::string& key, Int& target) {
    const auto s = raw(key);
    if (!s) return;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s->c_str(), &end, 10);
    if (end == s->c_str() || *end != '\0' || errno == ERANGE) {
      problems.push_back(key + ": '" + *s + "' is not an integer");
      return;
    }
    if (std::is_unsigned_v<Int> && v < 0) {
      problems.push_back(key + ": must be >= 0, got " + *s);
      return;
    }
    target = static_cast<Int>(v);
  }

  void seed(const std::string& key, std::uint64_t& target) {
    const auto s = raw(key);
    if (!s) return;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s->c_str(), &end, 0);
    if (end == s->c_str() || *end != '\0' || errno == ERANGE || s->front() == '-') {
      problems.push_back(key + ": '" + *s + "' is not an unsigned 64-bit integer");
      return;
    }
    target = v;
  }

  void boolean(const std::string& key, bool& target) {
    const auto s = raw(key);
    if (!s) return;
    if (*s == "true" || *s == "1" || *s == "yes") {
      target = true;
    } else if (*s == "false" || *s == "0" || *s == "no") {
      target = false;
    } else {
      problems.push_back(key + ": '" + *s + "' is not a boolean");
    }
  }

  std::vector<std::string> problems;

 private:
  const KeyValues& kv_;
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration:" + join(problems)), problems_(std::move(problems)) {}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (!out.emplace(key, value).second) {
      problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

Procedure ExperimentConfig::bound_procedure() const {
  switch (procedure) {
    case ProcedureKind::B:
    case ProcedureKind::MleB: return Procedure::B;
    case ProcedureKind::A:
    case ProcedureKind::MleA: return Procedure::A;
    case ProcedureKind::TwoD: return Procedure::TwoD;
  }
  return Procedure::B;
}

ExperimentConfig make_config(const std::vector<KeyValues>& layers) {
  KeyValues merged;
  for (const auto& layer : layers) {
    for (const auto& [k, v] : layer) merged[k] = v;
  }
  std::vector<std::string> problems;
  for (const auto& [k, v] : merged) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), k) == std::end(kKnownKeys)) {
      problems.push_back("unknown key '" + k + "'");
    }
  }

  Reader rd(merged);
  ExperimentConfig c;
  rd.real("a", c.model.a);
  rd.real("b", c.model.b);
  rd.real("sigma", c.model.sigma);
  c.model.x0 = c.model.a / c.model.b;
  rd.real("x0", c.model.x0);
  c.region = ParamRegion::point(c.model);
  rd.real("a_min", c.region.a_min);
  rd.real("a_max", c.region.a_max);
  rd.real("b_min", c.region.b_min);
  rd.real("b_max", c.region.b_max);
  if (const auto p = rd.raw("procedure")) {
    try {
      c.procedure = parse_procedure(*p);
    } catch (const std::invalid_argument& e) {
      rd.problems.push_back(std::string("procedure: ") + e.what());
    }
  }
  rd.real("T", c.T);
  rd.integer("m", c.m);
  rd.real("delta", c.delta);
  rd.real("varpi", c.varpi);
  rd.real("v_star", c.v_star);
  c.H = rd.real("H");
  c.r = rd.real("r");
  rd.real("step", c.step);
  rd.integer("replicates", c.replicates);
  rd.seed("seed", c.seed);
  rd.integer("threads", c.threads);
  rd.boolean("stationary_start", c.stationary_start);
  rd.boolean("verbose_stages", c.verbose_stages);
  if (auto s = rd.raw("out_json")) c.out_json = *s;
  if (auto s = rd.raw("out_csv")) c.out_csv = *s;

  problems.insert(problems.end(), rd.problems.begin(), rd.problems.end());
  if (problems.empty()) {
    auto more = validate(c);
    problems.insert(problems.end(), more.begin(), more.end());
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> p;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) p.push_back(what);
  };
  const ModelParams& mp = c.model;
  const ParamRegion& rg = c.region;
  need(mp.a > 0.0, "model: a > 0");
  need(mp.b > 0.0, "model: b > 0");
  need(mp.sigma > 0.0, "model: sigma > 0");
  need(mp.x0 > 0.0, "model: x0 > 0");
  need(rg.a_min > 0.0 && rg.a_min <= rg.a_max, "region: 0 < a_min <= a_max");
  need(rg.b_min > 0.0 && rg.b_min <= rg.b_max, "region: 0 < b_min <= b_max");
  need(c.replicates >= 1, "replicates >= 1");
  need(c.T >= 1.0, "horizon T >= 1");
  need(c.step > 0.0 && c.step <= c.T, "grid step in (0, T]");
  need(c.m >= 2, "moment order m >= 2");
  need(c.delta > 0.0 && c.delta < 0.5, "delta in (0, 1/2)");
  need(c.varpi > 1.0 && c.varpi < 2.0, "varpi in (1, 2)");
  need(c.v_star >= 0.0, "v_star >= 0");
  need(c.threads >= 1, "threads >= 1");
  if (c.r) need(*c.r >= 1.0, "clamp level r >= 1");
  if (!p.empty()) return p;

  ParamRegion region = rg;
  region.sigma = mp.sigma;
  region.x0 = mp.x0;
  need(mp.a >= region.a_min && mp.a <= region.a_max, "true a must lie in [a_min, a_max]");
  need(mp.b >= region.b_min && mp.b <= region.b_max, "true b must lie in [b_min, b_max]");
  const Procedure proc = c.bound_procedure();
  switch (proc) {
    case Procedure::B:
      need(region.a_min == region.a_max, "b procedure: a is known, so a_min = a_max");
      break;
    case Procedure::A:
      need(region.b_min == region.b_max, "a procedure: b is known, so b_min = b_max");
      need(region.a_min > mp.sigma / 2.0, "a procedure: a_min > sigma/2 (Theta inside (sigma/2, inf))");
      break;
    case Procedure::TwoD:
      need(region.a_min > mp.sigma / 2.0, "2d procedure: a_min > sigma/2 (Theta inside (sigma/2, inf) x (0, inf))");
      break;
  }
  if (!p.empty() || !c.H) return p;

  try {
    const double H = *c.H;
    switch (proc) {
      case Procedure::B:
        need(H > 0.0 && H < region.a_star() * c.T, "threshold: 0 < H < a_* T");
        break;
      case Procedure::A: {
        const double r = c.r.value_or(r_threshold(region, region.b_min, c.T, c.delta));
        need(H > 0.0 && H < mu_a_star(region, r) * c.T, "threshold: 0 < H < mu_{a,*} T");
        break;
      }
      case Procedure::TwoD: {
        const double r = c.r.value_or(r_threshold_2d(region, c.T, c.delta));
        const double mu = mu_star(region, r);
        need(c.T > 1.0 / mu, "horizon: T > 1/mu_*");
        need(H >= 1.0 && H < mu * c.T, "threshold: 1 <= H < mu_* T");
        break;
      }
    }
  } catch (const std::exception& e) {
    p.push_back(e.what());
  }
  return p;
}

}  // namespace cirseq

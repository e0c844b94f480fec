#include <algorithm>
#include <string>

#include "doctest.h"

#include "cirseq/config.hpp"
#include "cirseq/experiment.hpp"

using namespace cirseq;

namespace {

KeyValues smoke_b() {
  return parse_key_values(
      "procedure = b\n"
      "a = 1\nb = 0.5\nsigma = 0.5\nx0 = 2\n"
      "T = 50   # short horizon\n"
      "m = 2\nreplicates = 60\nseed = 3\n");
}

bool mentions(const ConfigError& e, const std::string& needle) {
  return std::any_of(e.problems().begin(), e.problems().end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

ConfigError error_for(KeyValues extra) {
  try {
    make_config({smoke_b(), std::move(extra)});
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError({});
}

}  // namespace

TEST_CASE("key-value parsing") {
  const KeyValues kv = parse_key_values("# header\n a = 1 \n\nb=2 # trailing\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "2");
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("just words\n"), ConfigError);
}

TEST_CASE("config defaults and layering") {
  const ExperimentConfig c = make_config({smoke_b(), {{"T", "80"}}});
  CHECK(c.T == 80.0);
  CHECK(c.region.a_min == 1.0);
  CHECK(c.region.b_max == 0.5);
  CHECK_FALSE(c.H);
  const ExperimentConfig d = make_config({{{"a", "1"}, {"b", "0.25"}, {"sigma", "0.5"}}});
  CHECK(d.model.x0 == 4.0);
}

TEST_CASE("config rejections name the requirement") {
  CHECK(mentions(error_for({{"replicates", "0"}}), "replicates >= 1"));
  CHECK(mentions(error_for({{"bogus", "1"}}), "unknown key 'bogus'"));
  CHECK(mentions(error_for({{"H", "1000"}}), "0 < H < a_* T"));
  CHECK(mentions(error_for({{"procedure", "a"}, {"a_min", "0.2"}}), "a_min > sigma/2"));
  CHECK(mentions(error_for({{"b", "0.9"}, {"b_min", "0.25"}, {"b_max", "0.6"}}), "true b must lie"));
  CHECK(mentions(error_for({{"procedure", "2d"}, {"varpi", "2"}}), "varpi in (1, 2)"));
  CHECK(mentions(error_for({{"procedure", "zz"}}), "procedure"));
  const ConfigError many = error_for({{"T", "0.5"}, {"m", "1"}});
  CHECK(many.problems().size() >= 2);
}

TEST_CASE("report does not depend on thread count") {
  ExperimentConfig c = make_config({smoke_b()});
  c.threads = 1;
  const Report r1 = run_experiment(c);
  c.threads = 4;
  const Report r4 = run_experiment(c);
  CHECK(r1.json.dump() == r4.json.dump());
  CHECK(r1.csv == r4.csv);
  CHECK(r1.has_verdict);
  CHECK(r1.pass);
}

TEST_CASE("constants ignore the seed") {
  ExperimentConfig c = make_config({smoke_b()});
  const Json j1 = dump_constants(c);
  c.seed = 999;
  CHECK(dump_constants(c).dump() == j1.dump());
  CHECK(j1["threshold"]["residual"].get<double>() < 1e-10);
  c.m = 3;
  const Json j3 = dump_constants(c);
  CHECK(j3["L_m"]["3"].get<double>() > j3["L_m"]["2"].get<double>());
}

TEST_CASE("2d resolution raises a small threshold to one") {
  ExperimentConfig c = make_config({smoke_b(), {{"procedure", "2d"}, {"T", "100"}}});
  const ResolvedProcedure rp = resolve(c);
  CHECK(rp.H >= 1.0);
  CHECK(rp.schedule.n_star == doctest::Approx(2.0 * rp.u_star * rp.H));
  if (rp.solution.H < 1.0) CHECK(rp.H_raised_to_minimum);
}

TEST_CASE("MLE runs report completion") {
  ExperimentConfig c = make_config({smoke_b(), {{"procedure", "mle-b"}}});
  const Report r = run_experiment(c);
  CHECK_FALSE(r.has_verdict);
  CHECK(r.json["verdict"] == "complete");
}

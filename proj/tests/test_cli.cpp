#include <doctest.h>

#include <json.hpp>

#include "polyrand/cli.hpp"

using namespace polyrand;
using namespace polyrand::cli;

namespace {

RunConfig make(const std::string& suite, nlohmann::json params = nlohmann::json::object()) {
  RunConfig c;
  c.suite = suite;
  c.params = std::move(params);
  c.seed = 42;
  return c;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("suite list") {
    const auto& names = suite_names();
    for (const char* s : {"cantor-scan", "weyl", "jk-count", "ik", "vinogradov-verify", "qf-density", "qf-sandwich",
                          "qf-tail", "cp-test", "stability"})
      CHECK(std::find(names.begin(), names.end(), s) != names.end());
    for (const auto& n : names) CHECK(describe_suites().find(n) != std::string::npos);
  }

  TEST_CASE("diophantine count headline") {
    auto out = run(make("jk-count", {{"P", 3}, {"m", 3}, {"k", 2}}));
    CHECK(out.exit_code == kPass);
    CHECK(out.summary.rfind("15\n", 0) == 0);
    CHECK(out.artifact.rfind("# polyrand-envelope/1 suite=", 0) == 0);
  }

  TEST_CASE("configuration errors map to exit code 2") {
    CHECK(run(make("jk-count", {{"P", 3}, {"bogus", 1}})).exit_code == kConfigError);
    CHECK(run(make("jk-count", {{"P", "three"}})).exit_code == kConfigError);
    CHECK(run(make("no-such-suite")).exit_code == kConfigError);
    CHECK(run(make("jk-count", {{"P", 0}})).exit_code == kConfigError);
    CHECK(run(make("cp-test", {{"law1", {{"name", "normal"}, {"skew", 1}}}})).exit_code == kConfigError);
    CHECK_THROWS_AS(dry_run(make("weyl", {{"coefficients", "x"}})), ConfigError);
  }

  TEST_CASE("dry runs predict cost without running") {
    auto big = make("jk-count", {{"P", 50}, {"m", 3}, {"k", 4}, {"method", "enumerate"}});
    auto cost = dry_run(big);
    CHECK_FALSE(cost.feasible);
    CHECK(run(big).exit_code == kInfeasible);
    big.dry_run = true;
    auto d = run(big);
    CHECK(d.exit_code == kInfeasible);
    CHECK(d.artifact.empty());
    auto ok = make("jk-count", {{"P", 50}, {"m", 3}, {"k", 2}});
    ok.dry_run = true;
    auto o = run(ok);
    CHECK(o.exit_code == kPass);
    REQUIRE(o.cost.has_value());
    CHECK(o.cost->feasible);
    CHECK(o.summary.rfind("dry run:", 0) == 0);
  }

  TEST_CASE("config file parsing") {
    auto c = RunConfig::from_json(
        R"({"suite":"weyl","seed":7,"format":"json","jobs":4,"params":{"P_grid":[10,20]}})");
    CHECK(c.suite == "weyl");
    CHECK(c.seed == 7);
    CHECK(c.format == Format::json);
    CHECK(c.jobs == 4);
    CHECK(c.params["P_grid"].size() == 2);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"suite":"weyl","sede":7})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"suite":"weyl","format":"xml"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json("not json"), ConfigError);
  }

  TEST_CASE("JSON artifacts parse and carry metrics") {
    auto c = make("cantor-scan", {{"t_max", 20.0}});
    c.format = Format::json;
    auto out = run(c);
    CHECK(out.exit_code == kPass);
    auto j = nlohmann::json::parse(out.artifact);
    CHECK(j.contains("metrics"));
    CHECK(j.contains("rows"));
  }

  TEST_CASE("artifacts do not depend on the worker count") {
    for (auto cfg : {make("weyl"), make("cp-test", {{"n_samples", 20000}}),
                     make("stability", {{"n_samples", 10000}, {"N_grid", {1, 4, 16}}}),
                     make("qf-density", {{"method", "mc_kde"}, {"n_mc", 20000}, {"u_grid", {1.0, 2.0}}})}) {
      cfg.jobs = 1;
      auto a = run(cfg);
      cfg.jobs = 4;
      auto b = run(cfg);
      CHECK(a.exit_code == b.exit_code);
      CHECK(a.artifact == b.artifact);
      CHECK(a.summary == b.summary);
    }
  }
}

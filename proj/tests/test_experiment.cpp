#include <doctest.h>

#include <sstream>

#include "lbr/errors.hpp"
#include "lbr/experiment.hpp"

using namespace lbr;
using nlohmann::json;

namespace {

std::string config_path(const std::string& name) { return std::string(LBR_SOURCE_DIR) + "/configs/" + name; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ExperimentConfig small() {
  ExperimentConfig c;
  c.router = {4, 8, 8, 2.0, 2.0, 0.05};
  c.traffic.load = 0.9;
  c.sim.horizon = 20'000;
  c.sim.thresholds = {{0, 1, 2, 5}};
  c.bounds.thresholds = {{1, 5, 10}};
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c = small();
  c.traffic.load.reset();
  c.traffic.rates = {{0.1, 0.2, 0.3, 0.1}, {0.2, 0.2, 0.2, 0.2}, {0.1, 0.1, 0.1, 0.1}, {0.3, 0.1, 0.1, 0.2}};
  c.sim.warmup = 123;
  c.tradeoff.delay_budget = 400;
  c.bounds.curves = {CurveKind::e2e_d, CurveKind::output_q};
  c.power = {"table", 0, 0, {0, 1, 2, 3, 4, 5, 6, 7, 8}};
  CHECK(parse_config(to_json(c)) == c);
  CHECK(parse_config(to_json(preset("figure2"))) == preset("figure2"));
  CHECK(parse_config(to_json(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("config defaults and errors") {
  const ExperimentConfig c = parse_config(json::parse(R"({"router": {"n": 2, "m": 6}})"));
  CHECK(c.router.m_active == 6);
  CHECK(c.traffic.load == 1.0);
  CHECK(c.policy.form == ChernoffForm::tight);

  CHECK_THROWS_AS(parse_config(json::parse(R"({"routr": {}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"router": {"n": 2, "speed": 3}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"router": {"n": "two"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"traffic": {"load": 0.5, "rates": [[0.5]]}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"router": {"n": 2}, "traffic": {"rates": [[0.5]]}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"policy": {"form": "tight", "path": "closed_form"}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"sim": {"horizon": 10, "warmup": 20}})")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK_THROWS_AS(preset("figure9"), ConfigError);
}

TEST_CASE("shipped configs") {
  CHECK(load_config(config_path("figure2.json")) == preset("figure2"));
  CHECK(load_config(config_path("figure3.json")) == preset("figure3"));
  for (const char* name : {"validate.json", "simulate.json", "tradeoff.json", "lookup.json"})
    CHECK_NOTHROW(load_config(config_path(name)));
}

TEST_CASE("threshold grids") {
  CHECK(ThresholdGrid{{}, 0, 1, 0.25}.expand() == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
  CHECK(ThresholdGrid{{3, 7}}.expand() == std::vector<double>{3, 7});
  CHECK(ThresholdGrid{{}, 1, 100, 1}.expand().size() == 100);
}

TEST_CASE("number format") {
  CHECK(format_number(0.5) == "5.00000000e-01");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("bounds command") {
  ExperimentConfig c = small();
  c.sweep = {"speedup", {0.8, 2.0}};
  std::ostringstream out, log;
  CHECK(cmd_bounds(c, out, log) == kExitInfeasible);
  const auto l = lines(out.str());
  REQUIRE(l.size() == 6);
  CHECK(l[0].rfind("# lbr 0.1.0 command=bounds config={", 0) == 0);
  CHECK(l[1] == "curve_id,threshold,probability,log10_probability");
  CHECK(l[2] == "middle_q@speedup=0.8,,infeasible,");
  CHECK(l[3].rfind("middle_q@speedup=2,1,", 0) == 0);
  CHECK(log.str().find("infeasible") != std::string::npos);

  c.sweep = {"none", {}};
  std::ostringstream ok;
  CHECK(cmd_bounds(c, ok, log) == kExitOk);
  CHECK(lines(ok.str()).size() == 5);
}

TEST_CASE("simulate command is deterministic") {
  const ExperimentConfig c = small();
  std::ostringstream a, b, log;
  CHECK(cmd_simulate(c, a, log) == kExitOk);
  CHECK(cmd_simulate(c, b, log) == kExitOk);
  CHECK(a.str() == b.str());
  const auto l = lines(a.str());
  CHECK(l[1] == "curve_id,threshold,probability,log10_probability,samples");
  CHECK(l[2].rfind("input_q,0,1.00000000e+00,", 0) == 0);
  CHECK(a.str().find("# summary e2e_d samples=") != std::string::npos);

  ExperimentConfig bad = c;
  bad.traffic.load.reset();
  bad.traffic.rates = {{0.9, 0.9, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  CHECK_THROWS_AS(cmd_simulate(bad, a, log), ConfigError);
}

TEST_CASE("validate command") {
  ExperimentConfig c = small();
  c.sim.horizon = 100'000;
  c.sim.thresholds = {{}, 0, 60, 1};
  std::ostringstream out, log;
  CHECK(cmd_validate(c, out, log) == kExitOk);
  CHECK(out.str().find("# result PASS") != std::string::npos);
  std::ostringstream out2;
  CHECK(cmd_validate(c, out2, log, std::log(1e-6)) == kExitValidation);
  CHECK(out2.str().find("# result FAIL") != std::string::npos);
  CHECK(out2.str().find(",FAIL\n") != std::string::npos);
}

TEST_CASE("tradeoff command") {
  ExperimentConfig c = small();
  c.traffic.load = 1.0;
  std::ostringstream out, log;
  CHECK(cmd_tradeoff(c, out, log) == kExitOk);
  auto l = lines(out.str());
  REQUIRE(l.size() == 7);
  CHECK(l[1] == "m_active,power,delay_bound,queue_bound,feasible");
  CHECK(l[2] == "4,4.00000000e+00,,,false");

  c.tradeoff.mode = "lookup";
  std::ostringstream lk;
  CHECK(cmd_tradeoff(c, lk, log) == kExitOk);
  l = lines(lk.str());
  REQUIRE(l.size() == 6);
  CHECK(l[1] == "load,m_active,power,delay_bound,meets_budget");
  CHECK(l[5].rfind("1,8,8.00000000e+00,", 0) == 0);

  c.tradeoff.mode = "frontier";
  c.router.alpha = 1.0;
  std::ostringstream inf;
  CHECK(cmd_tradeoff(c, inf, log) == kExitInfeasible);
}

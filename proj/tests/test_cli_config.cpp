#include "doctest.h"

#include <string>

#include "dashmech/config.hpp"

using namespace dashmech;

namespace {

const char* kFullConfig = R"({
  "format": "winner_pays_bid",
  "vmax": 3.0,
  "stages": 20,
  "seed": 7,
  "grid": 513,
  "bid_grid": 257,
  "algorithm": {"kind": "proportional_share"},
  "agents": [
    {"values": {"kind": "static", "value": 2.5},
     "strategy": {"kind": "follow_dashboard"}},
    {"values": {"kind": "iid_uniform", "low": 0.1, "high": 2.0},
     "strategy": {"kind": "hedge", "arms": 33}}
  ],
  "dashboard": {"policy": "k_lookback", "k": 3},
  "rebalancing": {"mode": "ir", "rate": 0.2, "dead_band": 0.1},
  "single_call": {"enabled": false, "rho": 0.3},
  "output": {"dir": "scratch", "quiet": true},
  "record": {"replay": true, "best_response": false},
  "tolerances": {"min_slope": 1e-8}
})";

}  // namespace

TEST_CASE("full config round trip") {
  const ExperimentConfig cfg = parse_config(kFullConfig);
  CHECK(cfg.format == PaymentFormat::WinnerPaysBid);
  CHECK(cfg.vmax == 3.0);
  CHECK(cfg.stages == 20);
  CHECK(cfg.seed == 7);
  CHECK(cfg.grid == 513);
  CHECK(cfg.agents.size() == 2);
  CHECK(cfg.agents[1].strategy.kind == AgentStrategy::Kind::Hedge);
  CHECK(cfg.agents[1].strategy.hedge_arms == 33);
  CHECK(cfg.policy.kind == PolicyKind::KLookback);
  CHECK(cfg.policy.k == 3);
  CHECK(cfg.rebalance.mode == RebalanceConfig::Mode::IR);
  CHECK(cfg.rebalance.rate == 0.2);
  CHECK(cfg.output.dir == "scratch");
  CHECK(cfg.output.quiet);
  CHECK(cfg.tol.min_slope == 1e-8);

  // serialized and re-parsed configs agree
  const ExperimentConfig again = parse_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("schema errors carry their location") {
  try {
    (void)parse_config(R"({"format": "all_pay", "stages": 5,
                           "algorithm": {"kind": "proportional_share"},
                           "agents": []})");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(e.where == "/agents");
  }

  try {
    (void)parse_config(R"({"format": "second_price", "stages": 5,
                           "algorithm": {"kind": "proportional_share"},
                           "agents": [{"values": {"kind": "static", "value": 1},
                                       "strategy": {"kind": "follow_dashboard"}}]})");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(e.where == "/format");
  }

  try {
    (void)parse_config("{\n  \"format\": \"all_pay\",\n  oops\n}");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("seed sweeps") {
  const ExperimentConfig cfg = parse_config(R"({
    "format": "all_pay", "stages": 3,
    "seeds": {"from": 5, "to": 9},
    "algorithm": {"kind": "random_power"},
    "agents": [{"values": {"kind": "static", "value": 0.5},
                "strategy": {"kind": "follow_dashboard"}}]
  })");
  CHECK(cfg.is_sweep());
  CHECK(cfg.seed == 5);
  CHECK(cfg.seed_end == 9);
}

TEST_CASE("semantic validation") {
  CHECK_THROWS_AS((void)parse_config(R"({
    "format": "all_pay", "stages": 0,
    "algorithm": {"kind": "proportional_share"},
    "agents": [{"values": {"kind": "static", "value": 0.5},
                "strategy": {"kind": "follow_dashboard"}}]
  })"), ConfigError);

  CHECK_THROWS_AS((void)parse_config(R"({
    "format": "all_pay", "stages": 5,
    "single_call": {"enabled": true, "rho": 1.5},
    "algorithm": {"kind": "proportional_share"},
    "agents": [{"values": {"kind": "static", "value": 0.5},
                "strategy": {"kind": "follow_dashboard"}}]
  })"), ConfigError);
}

#include "dashmech/trace_io.hpp"

TEST_CASE("rules and dashboards serialize to knot JSON") {
  const MonotoneRule rule = MonotoneRule::from_knots({0.0, 1.0, 2.0}, {0.0, 0.2, 1.0}, 2.0);
  const MonotoneRule again = rule_from_json(rule_to_json(rule));
  CHECK(again.eval(1.5) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(again.vmax() == 2.0);

  // bare knot-array form is accepted too
  const MonotoneRule bare = rule_from_json("[[0.0, 0.0], [1.0, 1.0]]");
  CHECK(bare.eval(0.5) == doctest::Approx(0.5));

  const Dashboard d = Dashboard::make(rule, PaymentFormat::AllPay, 0.1);
  const std::string js = dashboard_to_json(d);
  CHECK(js.find("\"transfer\":0.1") != std::string::npos);
  CHECK(js.find("all_pay") != std::string::npos);
}

TEST_CASE("single-call rebalancing rate defaults below the allocation floor") {
  const ExperimentConfig cfg = parse_config(R"({
    "format": "winner_pays_bid", "stages": 5,
    "single_call": {"enabled": true, "rho": 0.2},
    "rebalancing": {"mode": "reference"},
    "algorithm": {"kind": "proportional_share"},
    "agents": [{"values": {"kind": "static", "value": 0.5},
                "strategy": {"kind": "follow_dashboard"}},
               {"values": {"kind": "static", "value": 0.4},
                "strategy": {"kind": "follow_dashboard"}}]
  })");
  CHECK(cfg.rebalance.rate == doctest::Approx(0.9 * 0.2 / 2.0));

  const ExperimentConfig plain = parse_config(R"({
    "format": "all_pay", "stages": 5,
    "rebalancing": {"mode": "reference"},
    "algorithm": {"kind": "proportional_share"},
    "agents": [{"values": {"kind": "static", "value": 0.5},
                "strategy": {"kind": "follow_dashboard"}}]
  })");
  CHECK(plain.rebalance.rate == 1.0);
}

#include "dashmech/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dashmech {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg, const std::string& where) {
  throw ConfigError(msg, where.empty() ? "/" : where);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(std::string("missing field \"") + key + "\"", where);
  return j.at(key);
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) fail("expected a number", where);
  return j.get<double>();
}

double num_or(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return num(j.at(key), where + "/" + key);
}

std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail("expected an integer", where);
  return j.get<std::int64_t>();
}

std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) fail("expected a string", where);
  return j.get<std::string>();
}

PaymentFormat parse_format(const json& j, const std::string& where) {
  const std::string s = str(j, where);
  if (s == "winner_pays_bid") return PaymentFormat::WinnerPaysBid;
  if (s == "all_pay") return PaymentFormat::AllPay;
  fail("format must be \"winner_pays_bid\" or \"all_pay\"", where);
}

AlgorithmSpec parse_algorithm(const json& j, const std::string& where) {
  AlgorithmSpec spec;
  const std::string kind = str(need(j, "kind", where), where + "/kind");
  if (kind == "proportional_share") {
    spec.kind = AlgorithmSpec::Kind::ProportionalShare;
  } else if (kind == "softmax_single_item") {
    spec.kind = AlgorithmSpec::Kind::SoftmaxSingleItem;
    spec.temperature = num_or(j, "temperature", 1.0, where);
    if (!(spec.temperature > 0.0)) fail("temperature must be positive", where + "/temperature");
  } else if (kind == "random_power") {
    spec.kind = AlgorithmSpec::Kind::RandomPower;
    spec.k_min = num_or(j, "k_min", 0.5, where);
    spec.k_max = num_or(j, "k_max", 2.0, where);
    if (!(spec.k_min > 0.0 && spec.k_max >= spec.k_min))
      fail("need 0 < k_min <= k_max", where);
  } else {
    fail("unknown algorithm kind \"" + kind + "\"", where + "/kind");
  }
  return spec;
}

ValuePath parse_values(const json& j, const std::string& where) {
  ValuePath vp;
  const std::string kind = str(need(j, "kind", where), where + "/kind");
  if (kind == "static") {
    vp.kind = ValuePath::Kind::Static;
    vp.value = num(need(j, "value", where), where + "/value");
  } else if (kind == "path") {
    vp.kind = ValuePath::Kind::Path;
    const json& arr = need(j, "path", where);
    if (!arr.is_array() || arr.empty()) fail("path must be a non-empty array", where + "/path");
    for (const auto& x : arr) vp.path.push_back(num(x, where + "/path"));
  } else if (kind == "iid_uniform") {
    vp.kind = ValuePath::Kind::IidUniform;
    vp.low = num_or(j, "low", 0.0, where);
    vp.high = num(need(j, "high", where), where + "/high");
  } else {
    fail("unknown value kind \"" + kind + "\"", where + "/kind");
  }
  return vp;
}

AgentStrategy parse_strategy(const json& j, const std::string& where) {
  AgentStrategy st;
  const std::string kind = str(need(j, "kind", where), where + "/kind");
  if (kind == "follow_dashboard") {
    st.kind = AgentStrategy::Kind::FollowDashboard;
  } else if (kind == "constant_bid") {
    st.kind = AgentStrategy::Kind::ConstantBid;
    st.constant_bid = num(need(j, "bid", where), where + "/bid");
  } else if (kind == "hedge") {
    st.kind = AgentStrategy::Kind::Hedge;
    const std::int64_t arms =
        j.contains("arms") ? integer(j.at("arms"), where + "/arms") : 257;
    if (arms < 2) fail("hedge needs at least two arms", where + "/arms");
    st.hedge_arms = static_cast<std::size_t>(arms);
  } else {
    fail("unknown strategy kind \"" + kind + "\"", where + "/kind");
  }
  return st;
}

PolicyConfig parse_policy(const json& j, const std::string& where) {
  PolicyConfig pc;
  const std::string kind = str(need(j, "policy", where), where + "/policy");
  if (kind == "inferred_values_all")
    pc.kind = PolicyKind::InferredValuesAll;
  else if (kind == "k_lookback")
    pc.kind = PolicyKind::KLookback;
  else if (kind == "last_stage")
    pc.kind = PolicyKind::LastStage;
  else if (kind == "last_winning_stage")
    pc.kind = PolicyKind::LastWinningStage;
  else
    fail("unknown dashboard policy \"" + kind + "\"", where + "/policy");
  pc.k = j.contains("k") ? static_cast<int>(integer(j.at("k"), where + "/k")) : 1;
  return pc;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column position.
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < json_text.size(); ++k) {
      if (json_text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(std::string("invalid JSON: ") + e.what(),
                      "line " + std::to_string(line) + ", column " + std::to_string(col));
  }

  ExperimentConfig cfg;
  cfg.format = parse_format(need(j, "format", ""), "/format");
  cfg.vmax = num_or(j, "vmax", 1.0, "");
  cfg.stages = static_cast<int>(integer(need(j, "stages", ""), "/stages"));
  if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(j.at("seed"), "/seed"));
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    cfg.seed = static_cast<std::uint64_t>(integer(need(s, "from", "/seeds"), "/seeds/from"));
    cfg.seed_end = static_cast<std::uint64_t>(integer(need(s, "to", "/seeds"), "/seeds/to"));
    if (cfg.seed_end < cfg.seed) fail("seeds.to must be >= seeds.from", "/seeds");
  }
  if (j.contains("grid")) {
    const std::int64_t g = integer(j.at("grid"), "/grid");
    if (g < 3) fail("grid must have at least 3 knots", "/grid");
    cfg.grid = static_cast<std::size_t>(g);
    cfg.grid_explicit = true;
  }
  if (j.contains("bid_grid")) {
    const std::int64_t g = integer(j.at("bid_grid"), "/bid_grid");
    if (g < 2) fail("bid_grid must have at least 2 points", "/bid_grid");
    cfg.bid_grid = static_cast<std::size_t>(g);
  }
  cfg.algorithm = parse_algorithm(need(j, "algorithm", ""), "/algorithm");

  const json& agents = need(j, "agents", "");
  if (!agents.is_array() || agents.empty()) fail("agents must be a non-empty array", "/agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "/agents/" + std::to_string(i);
    const json& a = agents.at(i);
    AgentSpec spec;
    spec.values = parse_values(need(a, "values", where), where + "/values");
    spec.strategy = parse_strategy(need(a, "strategy", where), where + "/strategy");
    cfg.agents.push_back(std::move(spec));
  }

  if (j.contains("dashboard")) cfg.policy = parse_policy(j.at("dashboard"), "/dashboard");
  if (j.contains("rebalancing")) {
    const json& r = j.at("rebalancing");
    const std::string mode = str(need(r, "mode", "/rebalancing"), "/rebalancing/mode");
    if (mode == "off")
      cfg.rebalance.mode = RebalanceConfig::Mode::Off;
    else if (mode == "reference")
      cfg.rebalance.mode = RebalanceConfig::Mode::Reference;
    else if (mode == "ir")
      cfg.rebalance.mode = RebalanceConfig::Mode::IR;
    else
      fail("rebalancing mode must be off/reference/ir", "/rebalancing/mode");
    cfg.rebalance.rate = num_or(r, "rate", 0.0, "/rebalancing");
    cfg.rebalance.dead_band = num_or(r, "dead_band", 0.0, "/rebalancing");
  }
  if (j.contains("single_call")) {
    const json& s = j.at("single_call");
    cfg.single_call.enabled =
        s.contains("enabled") ? s.at("enabled").get<bool>() : true;
    cfg.single_call.rho = num_or(s, "rho", 0.2, "/single_call");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    if (o.contains("dir")) cfg.output.dir = str(o.at("dir"), "/output/dir");
    if (o.contains("dump_dashboards"))
      cfg.output.dump_dashboards =
          static_cast<int>(integer(o.at("dump_dashboards"), "/output/dump_dashboards"));
    if (o.contains("quiet")) {
      cfg.output.quiet = o.at("quiet").get<bool>();
      cfg.quiet_explicit = true;
    }
  }
  if (j.contains("record")) {
    const json& r = j.at("record");
    if (r.contains("replay")) cfg.record_replay = r.at("replay").get<bool>();
    if (r.contains("best_response"))
      cfg.record_best_response = r.at("best_response").get<bool>();
  }
  if (cfg.rebalance.mode != RebalanceConfig::Mode::Off && cfg.rebalance.rate == 0.0) {
    // unset rate: full resolution per stage, except single-call runs where it
    // must stay below the instrumented dashboard's allocation floor
    cfg.rebalance.rate = cfg.single_call.enabled
                             ? 0.9 * cfg.single_call.rho /
                                   static_cast<double>(cfg.agents.size())
                             : 1.0;
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    cfg.tol.min_slope = num_or(t, "min_slope", cfg.tol.min_slope, "/tolerances");
    cfg.tol.no_win_eps = num_or(t, "no_win_eps", cfg.tol.no_win_eps, "/tolerances");
    cfg.tol.invert_tol_factor =
        num_or(t, "invert_tol_factor", cfg.tol.invert_tol_factor, "/tolerances");
    cfg.tol.fd_step_factor =
        num_or(t, "fd_step_factor", cfg.tol.fd_step_factor, "/tolerances");
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.agents.empty()) fail("experiment needs at least one agent", "/agents");
  if (cfg.stages < 1) fail("stage count must be positive", "/stages");
  if (!(cfg.vmax > 0.0)) fail("vmax must be positive", "/vmax");
  if (cfg.single_call.enabled && !(cfg.single_call.rho > 0.0 && cfg.single_call.rho < 1.0))
    fail("instrumentation rate must lie in (0, 1)", "/single_call/rho");
  if (cfg.rebalance.mode != RebalanceConfig::Mode::Off &&
      !(cfg.rebalance.rate > 0.0 && cfg.rebalance.rate <= 1.0))
    fail("rebalancing rate must lie in (0, 1]", "/rebalancing/rate");
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["format"] = to_string(cfg.format);
  j["vmax"] = cfg.vmax;
  j["stages"] = cfg.stages;
  if (cfg.is_sweep())
    j["seeds"] = {{"from", cfg.seed}, {"to", cfg.seed_end}};
  else
    j["seed"] = cfg.seed;
  j["grid"] = cfg.grid;
  j["bid_grid"] = cfg.bid_grid;
  switch (cfg.algorithm.kind) {
    case AlgorithmSpec::Kind::ProportionalShare:
      j["algorithm"] = {{"kind", "proportional_share"}};
      break;
    case AlgorithmSpec::Kind::SoftmaxSingleItem:
      j["algorithm"] = {{"kind", "softmax_single_item"},
                        {"temperature", cfg.algorithm.temperature}};
      break;
    case AlgorithmSpec::Kind::RandomPower:
      j["algorithm"] = {{"kind", "random_power"},
                        {"k_min", cfg.algorithm.k_min},
                        {"k_max", cfg.algorithm.k_max}};
      break;
    case AlgorithmSpec::Kind::Custom:
      j["algorithm"] = {{"kind", "custom"}};
      break;
  }
  j["agents"] = json::array();
  for (const auto& a : cfg.agents) {
    json av;
    switch (a.values.kind) {
      case ValuePath::Kind::Static:
        av = {{"kind", "static"}, {"value", a.values.value}};
        break;
      case ValuePath::Kind::Path:
        av = {{"kind", "path"}, {"path", a.values.path}};
        break;
      case ValuePath::Kind::IidUniform:
        av = {{"kind", "iid_uniform"}, {"low", a.values.low}, {"high", a.values.high}};
        break;
    }
    json as;
    switch (a.strategy.kind) {
      case AgentStrategy::Kind::FollowDashboard:
        as = {{"kind", "follow_dashboard"}};
        break;
      case AgentStrategy::Kind::ConstantBid:
        as = {{"kind", "constant_bid"}, {"bid", a.strategy.constant_bid}};
        break;
      case AgentStrategy::Kind::Hedge:
        as = {{"kind", "hedge"}, {"arms", a.strategy.hedge_arms}};
        break;
    }
    j["agents"].push_back({{"values", av}, {"strategy", as}});
  }
  const char* policy = nullptr;
  switch (cfg.policy.kind) {
    case PolicyKind::InferredValuesAll: policy = "inferred_values_all"; break;
    case PolicyKind::KLookback: policy = "k_lookback"; break;
    case PolicyKind::LastStage: policy = "last_stage"; break;
    case PolicyKind::LastWinningStage: policy = "last_winning_stage"; break;
  }
  j["dashboard"] = {{"policy", policy}, {"k", cfg.policy.k}};
  const char* mode = cfg.rebalance.mode == RebalanceConfig::Mode::Off ? "off"
                     : cfg.rebalance.mode == RebalanceConfig::Mode::Reference ? "reference"
                                                                              : "ir";
  j["rebalancing"] = {{"mode", mode},
                      {"rate", cfg.rebalance.rate},
                      {"dead_band", cfg.rebalance.dead_band}};
  j["single_call"] = {{"enabled", cfg.single_call.enabled}, {"rho", cfg.single_call.rho}};
  j["output"] = {{"dir", cfg.output.dir},
                 {"dump_dashboards", cfg.output.dump_dashboards},
                 {"quiet", cfg.output.quiet}};
  j["record"] = {{"replay", cfg.record_replay}, {"best_response", cfg.record_best_response}};
  j["tolerances"] = {{"min_slope", cfg.tol.min_slope},
                     {"no_win_eps", cfg.tol.no_win_eps},
                     {"invert_tol_factor", cfg.tol.invert_tol_factor},
                     {"fd_step_factor", cfg.tol.fd_step_factor}};
  return j.dump(2);
}

}  // namespace dashmech

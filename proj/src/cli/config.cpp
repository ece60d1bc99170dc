#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "json.hpp"

namespace gfbm::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"simulate", "cov",   "smallball", "exponent",
                                         "integral-test", "chung", "probe", "audit"};

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(name + " must be finite");
  return x;
}

double positive(const json& v, const std::string& name) {
  const double x = number(v, name);
  if (!(x > 0.0)) throw ConfigError(name + " must be > 0");
  return x;
}

std::uint64_t count(const json& v, const std::string& name, std::uint64_t min_value) {
  std::uint64_t x = 0;
  if (v.is_number_unsigned()) {
    x = v.get<std::uint64_t>();
  } else if (v.is_number_float() && v.get<double>() >= 0.0 && v.get<double>() < 0x1p63 &&
             std::floor(v.get<double>()) == v.get<double>()) {
    x = static_cast<std::uint64_t>(v.get<double>());  // 2e5 and friends
  } else {
    throw ConfigError(name + " must be a nonnegative integer");
  }
  if (x < min_value) throw ConfigError(name + " must be >= " + std::to_string(min_value));
  return x;
}

std::vector<double> numbers(const json& v, const std::string& name) {
  if (!v.is_array()) throw ConfigError(name + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, name));
  return out;
}

std::string text(const json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError(name + " must be a string");
  return v.get<std::string>();
}

Endpoint endpoint(const json& v, const std::string& name) {
  const std::string s = text(v, name);
  if (s == "zero") return Endpoint::Zero;
  if (s == "infinity") return Endpoint::Infinity;
  throw ConfigError(name + " must be \"zero\" or \"infinity\"");
}

void parse_integral_test(const json& j, IntegralTestConfig& it) {
  only_keys(j, {"endpoints", "phi", "kappa", "beta", "lambda_factors", "lambda", "horizon"}, "integral_test");
  if (j.contains("endpoints")) {
    if (!j["endpoints"].is_array() || j["endpoints"].empty()) throw ConfigError("integral_test.endpoints must be a nonempty array");
    it.endpoints.clear();
    for (const auto& e : j["endpoints"]) it.endpoints.push_back(endpoint(e, "integral_test.endpoints"));
  }
  if (j.contains("phi")) {
    const std::string phi = text(j["phi"], "integral_test.phi");
    if (phi != "analytic" && phi != "tabulated") throw ConfigError("integral_test.phi must be \"analytic\" or \"tabulated\"");
    it.tabulated = phi == "tabulated";
  }
  auto positive_list = [&](const char* key, std::vector<double>& dst) {
    if (!j.contains(key)) return;
    dst = numbers(j[key], std::string("integral_test.") + key);
    for (double x : dst) {
      if (!(x > 0.0)) throw ConfigError(std::string("integral_test.") + key + " entries must be > 0");
    }
  };
  positive_list("kappa", it.kappa);
  positive_list("beta", it.beta);
  positive_list("lambda_factors", it.lambda_factors);
  positive_list("lambda", it.lambda);
  if (j.contains("horizon")) it.horizon = static_cast<int>(count(j["horizon"], "integral_test.horizon", 6));
  if (it.tabulated && it.lambda.empty()) throw ConfigError("integral_test.lambda is required for the tabulated model");
}

void parse_chung(const json& j, ChungConfig& c) {
  only_keys(j, {"endpoint", "points_per_octave", "extra_octaves", "misspecification"}, "chung");
  if (j.contains("endpoint")) c.endpoint = endpoint(j["endpoint"], "chung.endpoint");
  if (j.contains("points_per_octave")) c.points_per_octave = static_cast<int>(count(j["points_per_octave"], "chung.points_per_octave", 2));
  if (j.contains("extra_octaves")) c.extra_octaves = static_cast<int>(count(j["extra_octaves"], "chung.extra_octaves", 0));
  if (j.contains("misspecification")) c.misspecification = number(j["misspecification"], "chung.misspecification");
}

void parse_probe(const json& j, ProbeConfig& p) {
  only_keys(j, {"t", "u", "nu", "eta"}, "probe");
  if (j.contains("t")) p.t = positive(j["t"], "probe.t");
  if (j.contains("u")) p.u = positive(j["u"], "probe.u");
  if (j.contains("nu")) p.nu = positive(j["nu"], "probe.nu");
  if (j.contains("eta")) p.eta = positive(j["eta"], "probe.eta");
  if (p.u < p.t) throw ConfigError("probe.u must be >= probe.t");
}

void parse_tolerances(const json& j, Tolerances& t) {
  only_keys(j, {"cov", "exponent", "series", "chung_stable", "chung_drop"}, "tolerances");
  if (j.contains("cov")) t.cov = positive(j["cov"], "tolerances.cov");
  if (j.contains("exponent")) t.exponent = positive(j["exponent"], "tolerances.exponent");
  if (j.contains("series")) t.series = positive(j["series"], "tolerances.series");
  if (j.contains("chung_stable")) t.chung_stable = positive(j["chung_stable"], "tolerances.chung_stable");
  if (j.contains("chung_drop")) t.chung_drop = positive(j["chung_drop"], "tolerances.chung_drop");
}

}  // namespace

RunConfig parse_config(const std::string& raw, const std::string& command) {
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  only_keys(j,
            {"command", "params", "process", "grid_n", "t_max", "grid", "n_paths", "seed", "eps_list", "k_max",
             "tolerances", "output_dir", "sup_mode", "generator", "noise_mesh", "domain_cut", "format", "input",
             "integral_test", "chung", "probe", "plots"},
            "config");
  RunConfig cfg;
  cfg.raw = raw;
  cfg.command = command;
  if (j.contains("command") && text(j["command"], "command") != command) {
    throw ConfigError("config is for command '" + j["command"].get<std::string>() + "', not '" + command + "'");
  }
  if (!kCommands.count(command)) throw ConfigError("unknown command '" + command + "'");

  if (j.contains("params")) {
    const auto& p = j["params"];
    only_keys(p, {"gamma", "alpha", "theta"}, "params");
    for (const char* k : {"gamma", "alpha", "theta"}) {
      if (!p.contains(k)) throw ConfigError(std::string("params.") + k + " is required");
    }
    cfg.params = ProcessParams::validate(number(p["gamma"], "params.gamma"), number(p["alpha"], "params.alpha"),
                                         number(p["theta"], "params.theta"));
  }
  if (!cfg.params) throw ConfigError("params is required");

  if (j.contains("process")) {
    const std::string s = text(j["process"], "process");
    if (s == "X") cfg.process = Process::X;
    else if (s == "Y") cfg.process = Process::Y;
    else throw ConfigError("process must be \"X\" or \"Y\"");
  }
  if (j.contains("grid_n")) cfg.grid_n = count(j["grid_n"], "grid_n", 1);
  if (j.contains("t_max")) cfg.t_max = positive(j["t_max"], "t_max");
  if (j.contains("grid")) {
    cfg.grid = numbers(j["grid"], "grid");
    try {
      check_grid(cfg.grid);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  if (j.contains("n_paths")) cfg.n_paths = count(j["n_paths"], "n_paths", 1);
  if (j.contains("seed")) cfg.seed = count(j["seed"], "seed", 0);
  if (j.contains("eps_list")) {
    cfg.eps_list = numbers(j["eps_list"], "eps_list");
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
      if (!(cfg.eps_list[i] > 0.0)) throw ConfigError("eps_list entries must be > 0");
      if (i && !(cfg.eps_list[i] < cfg.eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
    }
  }
  if (j.contains("k_max")) cfg.k_max = static_cast<int>(count(j["k_max"], "k_max", 4));
  if (j.contains("tolerances")) parse_tolerances(j["tolerances"], cfg.tolerances);
  if (j.contains("output_dir")) cfg.output_dir = text(j["output_dir"], "output_dir");
  if (j.contains("sup_mode")) {
    const std::string s = text(j["sup_mode"], "sup_mode");
    if (s == "grid") cfg.sup_mode = SupMode::GridMax;
    else if (s == "bridge") cfg.sup_mode = SupMode::BrownianBridge;
    else throw ConfigError("sup_mode must be \"grid\" or \"bridge\"");
  }
  if (j.contains("generator")) {
    const std::string s = text(j["generator"], "generator");
    if (s == "cholesky") cfg.generator = GeneratorTag::Cholesky;
    else if (s == "discretized") cfg.generator = GeneratorTag::Discretized;
    else throw ConfigError("generator must be \"cholesky\" or \"discretized\"");
  }
  if (j.contains("noise_mesh")) cfg.noise_mesh = static_cast<int>(count(j["noise_mesh"], "noise_mesh", 256));
  if (j.contains("domain_cut")) cfg.domain_cut = positive(j["domain_cut"], "domain_cut");
  if (j.contains("format")) {
    cfg.format = text(j["format"], "format");
    if (cfg.format != "csv" && cfg.format != "binary") throw ConfigError("format must be \"csv\" or \"binary\"");
  }
  if (j.contains("input")) cfg.input = text(j["input"], "input");
  if (j.contains("integral_test")) parse_integral_test(j["integral_test"], cfg.integral_test);
  if (j.contains("chung")) parse_chung(j["chung"], cfg.chung);
  if (j.contains("probe")) parse_probe(j["probe"], cfg.probe);
  if (j.contains("plots")) {
    if (!j["plots"].is_boolean()) throw ConfigError("plots must be a boolean");
    cfg.plots = j["plots"].get<bool>();
  }

  if (command == "smallball" && cfg.eps_list.empty()) throw ConfigError("smallball needs eps_list");
  if ((command == "exponent" || command == "audit") && cfg.input.empty()) {
    throw ConfigError(command + " needs input (a smallball CSV)");
  }
  if (command == "integral-test" && cfg.integral_test.tabulated && cfg.input.empty()) {
    throw ConfigError("the tabulated integral test needs input (a smallball CSV)");
  }
  return cfg;
}

std::vector<double> run_grid(const RunConfig& cfg) {
  if (!cfg.grid.empty()) return cfg.grid;
  std::vector<double> g(cfg.grid_n);
  for (std::size_t k = 0; k < cfg.grid_n; ++k) g[k] = cfg.t_max * static_cast<double>(k + 1) / static_cast<double>(cfg.grid_n);
  return g;
}

const ProcessParams& require_params(const RunConfig& cfg) {
  if (!cfg.params) throw ConfigError("params is required");
  return *cfg.params;
}

}  // namespace gfbm::cli

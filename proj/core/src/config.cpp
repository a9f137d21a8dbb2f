#include "stochcbf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stochcbf/errors.hpp"

namespace stochcbf {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {
    "scenario", "n_agents", "rho",     "safe_distance", "k1",      "k2",      "sigma_p",       "sigma_v",
    "nu",       "mode",     "kappa",   "gamma",         "eps",     "trace_variant", "fallback", "dt",
    "horizon",  "seed",     "replicates", "tol_safety", "x0",      "nominal_input", "sigma"};

double get_number(const json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
    return v.get<double>();
}

std::optional<double> get_optional(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return get_number(doc, key, 0.0);
}

std::int64_t get_integer(const json& doc, const char* key, std::int64_t fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string("config: '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::string get_string(const json& doc, const char* key, const std::string& fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_string()) throw ConfigError(std::string("config: '") + key + "' must be a string");
    return v.get<std::string>();
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config: ") + name + " must be positive");
}

}  // namespace

double ScenarioConfig::effective_tol_safety() const {
    if (tol_safety) return *tol_safety;
    return is_collision() ? 0.05 * safe_distance : 0.02;
}

CollisionParams ScenarioConfig::collision_params() const {
    return CollisionParams{n_agents, rho, safe_distance, k1, k2, sigma_p, sigma_v, nu};
}

void ScenarioConfig::validate() const {
    if (scenario != "collision" && scenario != "scalar")
        throw ConfigError("config: scenario must be 'collision' or 'scalar'");
    require_positive(dt, "dt");
    require_positive(horizon, "horizon");
    require_positive(kappa, "kappa");
    if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("config: eps must lie in (0, 1)");
    if (gamma && !(*gamma >= 0.0 && std::isfinite(*gamma))) throw ConfigError("config: gamma must be >= 0");
    if (tol_safety && !(*tol_safety >= 0.0 && std::isfinite(*tol_safety)))
        throw ConfigError("config: tol_safety must be >= 0");
    if (is_collision()) {
        if (n_agents < 2) throw ConfigError("config: n_agents must be >= 2");
        require_positive(rho, "rho");
        require_positive(safe_distance, "safe_distance");
        require_positive(k1, "k1");
        require_positive(k2, "k2");
        require_positive(sigma_p, "sigma_p");
        require_positive(sigma_v, "sigma_v");
        require_positive(nu, "nu");
    } else {
        if (!(sigma >= 0.0 && std::isfinite(sigma))) throw ConfigError("config: sigma must be >= 0");
        if (!std::isfinite(x0) || !std::isfinite(nominal_input)) throw ConfigError("config: x0 and nominal_input must be finite");
        if (mode != ControllerMode::BaselineLinear && mode != ControllerMode::ZcbfComplete &&
            mode != ControllerMode::RcbfComplete)
            throw ConfigError(std::string("config: scalar scenario does not support mode ") + to_string(mode));
    }
}

ScenarioConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& item : doc.items())
        if (!kKeys.count(item.key())) throw ConfigError("config: unknown key '" + item.key() + "'");

    ScenarioConfig cfg;
    cfg.scenario = get_string(doc, "scenario", cfg.scenario);
    cfg.n_agents = static_cast<int>(get_integer(doc, "n_agents", cfg.n_agents));
    cfg.rho = get_number(doc, "rho", cfg.rho);
    cfg.safe_distance = get_number(doc, "safe_distance", cfg.safe_distance);
    cfg.k1 = get_number(doc, "k1", cfg.k1);
    cfg.k2 = get_number(doc, "k2", cfg.k2);
    cfg.sigma_p = get_number(doc, "sigma_p", cfg.sigma_p);
    cfg.sigma_v = get_number(doc, "sigma_v", cfg.sigma_v);
    cfg.nu = get_number(doc, "nu", cfg.nu);
    cfg.mode = parse_controller_mode(get_string(doc, "mode", to_string(cfg.mode)));
    cfg.kappa = get_number(doc, "kappa", cfg.kappa);
    cfg.gamma = get_optional(doc, "gamma");
    cfg.eps = get_number(doc, "eps", cfg.eps);
    cfg.trace_variant = parse_trace_variant(get_string(doc, "trace_variant", to_string(cfg.trace_variant)));
    cfg.fallback = parse_fallback(get_string(doc, "fallback", to_string(cfg.fallback)));
    cfg.dt = get_number(doc, "dt", cfg.dt);
    cfg.horizon = get_number(doc, "horizon", cfg.horizon);
    const std::int64_t seed = get_integer(doc, "seed", 0);
    if (doc.contains("seed") && doc.at("seed").is_number_unsigned())
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    else if (seed < 0)
        throw ConfigError("config: seed must be >= 0");
    else
        cfg.seed = static_cast<std::uint64_t>(seed);
    const std::int64_t reps = get_integer(doc, "replicates", cfg.replicates);
    if (reps < 1 || reps > 100'000'000) throw ConfigError("config: replicates out of range");
    cfg.replicates = static_cast<int>(reps);
    cfg.tol_safety = get_optional(doc, "tol_safety");
    cfg.x0 = get_number(doc, "x0", cfg.x0);
    cfg.nominal_input = get_number(doc, "nominal_input", cfg.nominal_input);
    cfg.sigma = get_number(doc, "sigma", cfg.sigma);
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ScenarioConfig& cfg, int indent) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    doc["scenario"] = cfg.scenario;
    doc["n_agents"] = cfg.n_agents;
    doc["rho"] = cfg.rho;
    doc["safe_distance"] = cfg.safe_distance;
    doc["k1"] = cfg.k1;
    doc["k2"] = cfg.k2;
    doc["sigma_p"] = cfg.sigma_p;
    doc["sigma_v"] = cfg.sigma_v;
    doc["nu"] = cfg.nu;
    doc["mode"] = to_string(cfg.mode);
    doc["kappa"] = cfg.kappa;
    doc["gamma"] = cfg.gamma ? nlohmann::ordered_json(*cfg.gamma) : nlohmann::ordered_json(nullptr);
    doc["eps"] = cfg.eps;
    doc["trace_variant"] = to_string(cfg.trace_variant);
    doc["fallback"] = to_string(cfg.fallback);
    doc["dt"] = cfg.dt;
    doc["horizon"] = cfg.horizon;
    doc["seed"] = cfg.seed;
    doc["replicates"] = cfg.replicates;
    doc["tol_safety"] = cfg.tol_safety ? nlohmann::ordered_json(*cfg.tol_safety) : nlohmann::ordered_json(nullptr);
    doc["x0"] = cfg.x0;
    doc["nominal_input"] = cfg.nominal_input;
    doc["sigma"] = cfg.sigma;
    return doc.dump(indent);
}

}  // namespace stochcbf

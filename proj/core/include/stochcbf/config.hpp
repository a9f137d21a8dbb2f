#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stochcbf/filter.hpp"
#include "stochcbf/scenarios.hpp"

namespace stochcbf {

/// Scenario and controller settings; the JSON form mirrors the fields
/// one-to-one and rejects unknown keys.
///
/// scenario "collision" uses the agent fields; scenario "scalar" is the
/// one-dimensional plant dx = u dt + sigma dW with h(x) = x, started at
/// x0 under the constant nominal input.
struct ScenarioConfig {
    std::string scenario = "collision";
    int n_agents = 10;
    double rho = 150.0;
    double safe_distance = 10.0;
    double k1 = 1.0;
    double k2 = 2.0;
    double sigma_p = 1.0;
    double sigma_v = 1.0;
    double nu = 1.0;
    ControllerMode mode = ControllerMode::ZcbfComplete;
    double kappa = 1.0;
    /// Error radius; derived from eps and the Riccati flow when absent.
    std::optional<double> gamma;
    double eps = 0.1;
    TraceVariant trace_variant = TraceVariant::KNu;
    Fallback fallback = Fallback::Relax;
    double dt = 1e-3;
    double horizon = 60.0;
    std::uint64_t seed = 0;
    int replicates = 1;
    /// A replicate is safe when min_t min h >= -tol_safety.
    /// Defaults to 0.05 safe_distance (collision) or 0.02 (scalar).
    std::optional<double> tol_safety;
    double x0 = 1.0;
    double nominal_input = -2.0;
    double sigma = 1.0;

    bool is_collision() const { return scenario == "collision"; }
    double effective_tol_safety() const;
    CollisionParams collision_params() const;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Parses and validates a JSON document. Throws ConfigError on syntax
/// errors, unknown keys, wrong types and invalid values.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

/// Canonical JSON object with every field (absent optionals as null).
std::string config_to_json(const ScenarioConfig& cfg, int indent = 2);

}  // namespace stochcbf

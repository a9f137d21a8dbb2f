#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochcbf/config.hpp"
#include "stochcbf/scenarios.hpp"
#include "stochcbf/sde.hpp"

namespace stochcbf {

/// A validated config with its scenario objects built once and shared by
/// every replicate.
class PreparedScenario {
public:
    explicit PreparedScenario(ScenarioConfig cfg);

    const ScenarioConfig& config() const { return cfg_; }
    const CollisionScenario* collision() const { return collision_ ? &*collision_ : nullptr; }
    const ScalarScenario* scalar() const { return scalar_ ? &*scalar_ : nullptr; }
    /// Present for modes that run the EKF.
    const std::optional<ErrorRadius>& error_radius() const { return radius_; }

    int agent_count() const;
    Eigen::VectorXd margins(const Eigen::VectorXd& x) const;
    Eigen::VectorXd agent_margins(const Eigen::VectorXd& x) const;

    /// One closed-loop run on stream `replicate` of the configured seed.
    Trajectory run(int replicate, std::size_t record_stride) const;

private:
    ScenarioConfig cfg_;
    std::optional<CollisionScenario> collision_;
    std::optional<ScalarScenario> scalar_;
    std::optional<ErrorRadius> radius_;
};

struct ReplicateRecord {
    int replicate = 0;
    bool failed = false;
    std::string failure;
    std::size_t steps = 0;
    /// min over time and safety functions of h.
    double min_margin = 0.0;
    bool safe = false;
    std::size_t infeasible_steps = 0;
    double mean_dev = 0.0;
    double max_dev = 0.0;
    /// sup_t ||x_t - xhat_t||_2 (zero without an estimator).
    double max_estimation_error = 0.0;
    /// min_h at every series_stride-th step, when requested.
    std::vector<double> min_margin_series;
};

struct CampaignReport {
    ScenarioConfig config;
    std::vector<ReplicateRecord> replicates;
    int violation_count = 0;
    double safety_fraction = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    /// Mean over replicates and steps of ||u - u_nom||_2.
    double mean_dev = 0.0;
    double max_dev = 0.0;
    /// Infeasible steps over all steps.
    double infeasible_rate = 0.0;
    std::optional<ErrorRadius> error_radius;
    /// Fraction of replicates whose estimation error ever exceeded gamma.
    std::optional<double> exceedance_fraction;
    std::size_t series_stride = 1;
    double wallclock_s = 0.0;
};

struct CampaignOptions {
    /// 0 picks the hardware concurrency.
    unsigned threads = 0;
    bool keep_series = false;
    std::size_t series_stride = 1;
};

/// Runs cfg.replicates seeded replicates (stream i for replicate i) and
/// aggregates them in replicate order, so the report does not depend on
/// the thread count. A blow-up marks its replicate failed and unsafe.
CampaignReport run_campaign(const ScenarioConfig& cfg, const CampaignOptions& options = {});

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for successes / n at normal quantile z.
WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct SafetyEstimate {
    std::size_t safe = 0;
    std::size_t n = 0;
    double fraction = 0.0;
    WilsonInterval interval;
};

/// Fraction of n replicates with min_t min h >= -tol_safety.
SafetyEstimate estimate_safety_probability(const ScenarioConfig& cfg, int n, const CampaignOptions& options = {});

}  // namespace stochcbf

#include "stochcbf/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "stochcbf/errors.hpp"

namespace stochcbf {

PreparedScenario::PreparedScenario(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.is_collision()) {
        collision_ = build_collision_scenario(cfg_.collision_params());
        if (uses_estimate(cfg_.mode)) {
            ErrorRadius r = collision_error_radius(*collision_, cfg_.eps, cfg_.horizon, cfg_.dt);
            if (cfg_.gamma) {
                r.hbar_gamma = *cfg_.gamma == 0.0 ? 0.0 : r.hbar_gamma * (*cfg_.gamma / r.gamma);
                r.gamma = *cfg_.gamma;
            }
            radius_ = r;
        }
    } else {
        scalar_ = build_scalar_scenario(cfg_.x0, cfg_.nominal_input, cfg_.sigma);
    }
}

int PreparedScenario::agent_count() const { return collision_ ? collision_->n_agents() : 1; }

Eigen::VectorXd PreparedScenario::margins(const Eigen::VectorXd& x) const {
    if (collision_) return collision_->margins(x);
    return Eigen::VectorXd::Constant(1, scalar_->h.value(x));
}

Eigen::VectorXd PreparedScenario::agent_margins(const Eigen::VectorXd& x) const {
    if (collision_) return collision_->agent_margins(x);
    return margins(x);
}

Trajectory PreparedScenario::run(int replicate, std::size_t record_stride) const {
    if (replicate < 0) throw ConfigError("run: replicate must be >= 0");
    SimulationOptions opt;
    opt.horizon = cfg_.horizon;
    opt.dt = cfg_.dt;
    opt.seed = cfg_.seed;
    opt.stream = static_cast<std::uint64_t>(replicate);
    opt.record_stride = record_stride;
    FilterOptions filter;
    filter.fallback = cfg_.fallback;

    if (scalar_) {
        opt.margins = [this](const Eigen::VectorXd& x) { return margins(x); };
        const Policy policy = make_scalar_policy(*scalar_, cfg_.mode, cfg_.kappa, filter);
        return simulate(scalar_->system, policy, scalar_->x0, opt);
    }

    const CollisionScenario& sc = *collision_;
    opt.margins = [&sc](const Eigen::VectorXd& x) { return sc.margins(x); };
    std::unique_ptr<EkfObserver> observer;
    if (uses_estimate(cfg_.mode)) {
        observer = make_collision_observer(sc);
        opt.observer = observer.get();
    }
    PairRowSettings settings;
    settings.mode = cfg_.mode;
    settings.kappa = cfg_.kappa;
    if (radius_) {
        settings.gamma = radius_->gamma;
        settings.hbar_gamma = radius_->hbar_gamma;
    }
    const Policy policy = make_collision_policy(sc, settings, cfg_.trace_variant, observer.get(), filter);
    return simulate(sc.system, policy, sc.x0, opt);
}

namespace {

ReplicateRecord run_one(const PreparedScenario& prepared, int replicate, const CampaignOptions& options) {
    const ScenarioConfig& cfg = prepared.config();
    ReplicateRecord rec;
    rec.replicate = replicate;
    const std::size_t steps = step_count(cfg.horizon, cfg.dt);
    try {
        const Trajectory traj = prepared.run(replicate, steps + 1);
        const RunSummary& s = traj.summary;
        rec.steps = s.steps;
        rec.min_margin = s.min_margin;
        rec.safe = s.min_margin >= -cfg.effective_tol_safety();
        rec.infeasible_steps = s.infeasible_steps;
        rec.mean_dev = s.steps > 0 ? s.deviation_sum / static_cast<double>(s.steps) : 0.0;
        rec.max_dev = s.deviation_max;
        rec.max_estimation_error = s.max_estimation_error;
        if (options.keep_series)
            for (std::size_t k = 0; k < s.min_margin_series.size(); k += options.series_stride)
                rec.min_margin_series.push_back(s.min_margin_series[k]);
    } catch (const IntegrationBlowup& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.steps = e.step();
        rec.min_margin = -std::numeric_limits<double>::infinity();
        rec.safe = false;
    }
    return rec;
}

}  // namespace

CampaignReport run_campaign(const ScenarioConfig& cfg, const CampaignOptions& options) {
    if (options.series_stride == 0) throw ConfigError("campaign: series_stride must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const PreparedScenario prepared(cfg);
    const int n = cfg.replicates;

    CampaignReport report;
    report.config = cfg;
    report.series_stride = options.series_stride;
    report.error_radius = prepared.error_radius();
    report.replicates.resize(static_cast<std::size_t>(n));

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                report.replicates[static_cast<std::size_t>(i)] = run_one(prepared, i, options);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    std::size_t safe = 0, total_steps = 0, infeasible = 0, completed = 0, exceed = 0;
    double dev_sum = 0.0;
    for (const ReplicateRecord& r : report.replicates) {
        if (r.safe) ++safe;
        if (r.failed) continue;
        ++completed;
        total_steps += r.steps;
        infeasible += r.infeasible_steps;
        dev_sum += r.mean_dev * static_cast<double>(r.steps);
        report.max_dev = std::max(report.max_dev, r.max_dev);
        if (report.error_radius && r.max_estimation_error > report.error_radius->gamma) ++exceed;
    }
    report.violation_count = n - static_cast<int>(safe);
    report.safety_fraction = static_cast<double>(safe) / n;
    const WilsonInterval ci = wilson_interval(safe, static_cast<std::size_t>(n));
    report.wilson_lo = ci.lo;
    report.wilson_hi = ci.hi;
    report.mean_dev = total_steps > 0 ? dev_sum / static_cast<double>(total_steps) : 0.0;
    report.infeasible_rate = total_steps > 0 ? static_cast<double>(infeasible) / static_cast<double>(total_steps) : 0.0;
    if (report.error_radius && completed > 0)
        report.exceedance_fraction = static_cast<double>(exceed) / static_cast<double>(completed);
    report.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) throw ConfigError("wilson_interval: n must be >= 1");
    if (successes > n) throw ConfigError("wilson_interval: successes exceed n");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SafetyEstimate estimate_safety_probability(const ScenarioConfig& cfg, int n, const CampaignOptions& options) {
    if (n < 1) throw ConfigError("estimate_safety_probability: n must be >= 1");
    ScenarioConfig run_cfg = cfg;
    run_cfg.replicates = n;
    CampaignOptions opt = options;
    opt.keep_series = false;
    const CampaignReport report = run_campaign(run_cfg, opt);
    SafetyEstimate est;
    est.n = static_cast<std::size_t>(n);
    est.safe = static_cast<std::size_t>(n - report.violation_count);
    est.fraction = report.safety_fraction;
    est.interval = {report.wilson_lo, report.wilson_hi};
    return est;
}

}  // namespace stochcbf

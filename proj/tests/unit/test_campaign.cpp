#include <gtest/gtest.h>

#include <cmath>

#include "stochcbf/campaign.hpp"
#include "stochcbf/errors.hpp"

using namespace stochcbf;

namespace {

ScenarioConfig small_collision(ControllerMode mode) {
    ScenarioConfig cfg;
    cfg.n_agents = 4;
    cfg.mode = mode;
    cfg.horizon = 3.0;
    cfg.replicates = 3;
    cfg.seed = 21;
    return cfg;
}

void expect_same(const CampaignReport& a, const CampaignReport& b) {
    ASSERT_EQ(a.replicates.size(), b.replicates.size());
    for (std::size_t i = 0; i < a.replicates.size(); ++i) {
        EXPECT_EQ(a.replicates[i].min_margin, b.replicates[i].min_margin);
        EXPECT_EQ(a.replicates[i].mean_dev, b.replicates[i].mean_dev);
        EXPECT_EQ(a.replicates[i].min_margin_series, b.replicates[i].min_margin_series);
    }
    EXPECT_EQ(a.violation_count, b.violation_count);
    EXPECT_EQ(a.mean_dev, b.mean_dev);
    EXPECT_EQ(a.infeasible_rate, b.infeasible_rate);
}

}  // namespace

TEST(Wilson, KnownValues) {
    // 45 of 50 at z = 1.96.
    const WilsonInterval w = wilson_interval(45, 50);
    EXPECT_NEAR(w.lo, 0.7864, 1e-4);
    EXPECT_NEAR(w.hi, 0.9565, 1e-4);
    const WilsonInterval all = wilson_interval(1000, 1000);
    EXPECT_DOUBLE_EQ(all.hi, 1.0);
    EXPECT_NEAR(all.lo, 0.99617, 1e-5);
    const WilsonInterval none = wilson_interval(0, 10);
    EXPECT_DOUBLE_EQ(none.lo, 0.0);
    EXPECT_THROW(wilson_interval(0, 0), ConfigError);
    EXPECT_THROW(wilson_interval(3, 2), ConfigError);
}

TEST(Campaign, RepeatableAndThreadIndependent) {
    const ScenarioConfig cfg = small_collision(ControllerMode::ZcbfIncomplete);
    CampaignOptions one, many;
    one.threads = 1;
    one.keep_series = true;
    many.threads = 3;
    many.keep_series = true;
    const CampaignReport a = run_campaign(cfg, one);
    expect_same(a, run_campaign(cfg, one));
    expect_same(a, run_campaign(cfg, many));
    ASSERT_TRUE(a.error_radius.has_value());
    ASSERT_TRUE(a.exceedance_fraction.has_value());
    EXPECT_EQ(a.replicates[0].min_margin_series.size(), a.replicates[0].steps + 1);
}

TEST(Campaign, SeriesStrideSubsamples) {
    ScenarioConfig cfg = small_collision(ControllerMode::BaselineLinear);
    cfg.replicates = 1;
    CampaignOptions opt;
    opt.keep_series = true;
    opt.series_stride = 100;
    const CampaignReport r = run_campaign(cfg, opt);
    EXPECT_EQ(r.replicates[0].min_margin_series.size(), 31u);
}

TEST(Campaign, ViolationCountBoundedAndFractionConsistent) {
    ScenarioConfig cfg = small_collision(ControllerMode::BaselineLinear);
    cfg.horizon = 8.0;
    cfg.replicates = 4;
    const CampaignReport r = run_campaign(cfg);
    EXPECT_LE(r.violation_count, 4);
    EXPECT_DOUBLE_EQ(r.safety_fraction, (4.0 - r.violation_count) / 4.0);
    EXPECT_LE(r.wilson_lo, r.safety_fraction);
    EXPECT_GE(r.wilson_hi, r.safety_fraction);
    EXPECT_DOUBLE_EQ(r.mean_dev, 0.0);
    EXPECT_GE(r.violation_count, 1);
}

TEST(Campaign, FilteredModesDeviateFromNominal) {
    const CampaignReport r = run_campaign(small_collision(ControllerMode::ZcbfComplete));
    EXPECT_GE(r.max_dev, r.mean_dev);
    EXPECT_FALSE(r.error_radius.has_value());
}

TEST(EstimateSafety, NoiselessScalarIsAlwaysSafe) {
    ScenarioConfig cfg;
    cfg.scenario = "scalar";
    cfg.sigma = 0.0;
    cfg.horizon = 5.0;
    const SafetyEstimate e = estimate_safety_probability(cfg, 20);
    EXPECT_EQ(e.safe, 20u);
    EXPECT_DOUBLE_EQ(e.fraction, 1.0);
    EXPECT_DOUBLE_EQ(e.interval.hi, 1.0);
    EXPECT_THROW(estimate_safety_probability(cfg, 0), ConfigError);
}

TEST(EstimateSafety, UnfilteredScalarIsUnsafe) {
    ScenarioConfig cfg;
    cfg.scenario = "scalar";
    cfg.mode = ControllerMode::BaselineLinear;
    cfg.horizon = 2.0;
    const SafetyEstimate e = estimate_safety_probability(cfg, 10);
    EXPECT_EQ(e.safe, 0u);
}

TEST(PreparedScenario, GammaOverrideRescalesShrink) {
    ScenarioConfig cfg = small_collision(ControllerMode::ZcbfIncomplete);
    cfg.gamma = 1.0;
    const PreparedScenario p(cfg);
    ASSERT_TRUE(p.error_radius().has_value());
    EXPECT_DOUBLE_EQ(p.error_radius()->gamma, 1.0);
    EXPECT_NEAR(p.error_radius()->hbar_gamma, std::sqrt(2.0), 1e-12);
}

TEST(PreparedScenario, BlowupBecomesFailedReplicate) {
    ScenarioConfig cfg;
    cfg.scenario = "scalar";
    cfg.mode = ControllerMode::BaselineLinear;
    cfg.nominal_input = -1e12;
    cfg.horizon = 1.0;
    cfg.replicates = 2;
    const CampaignReport r = run_campaign(cfg);
    EXPECT_TRUE(r.replicates[0].failed);
    EXPECT_FALSE(r.replicates[0].safe);
    EXPECT_EQ(r.violation_count, 2);
}

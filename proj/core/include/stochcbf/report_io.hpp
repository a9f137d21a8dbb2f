#pragma once

#include <ostream>
#include <string>

#include "stochcbf/campaign.hpp"

namespace stochcbf {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Columns t, replicate, agent, px, py, vx, vy, ux, uy, h_min, feasible;
/// one line per recorded sample and agent, LF endings. h_min is the
/// smallest margin among the pairs involving the agent. The final state has
/// no applied input, so its ux, uy and feasible fields are empty. The
/// scalar scenario writes its state as px with the other components zero.
void write_trajectory_csv(std::ostream& out, const PreparedScenario& scenario, const Trajectory& traj, int replicate);

/// One line per replicate: replicate, min_h, safe, mean_dev, max_dev,
/// infeasible_steps, steps, max_estimation_error, failed.
void write_report_csv(std::ostream& out, const CampaignReport& report);

/// t, replicate, min_h from the kept min-margin series.
void write_series_csv(std::ostream& out, const CampaignReport& report);

/// Summary document: config echo, violation_count, safety_fraction,
/// wilson_lo, wilson_hi, mean_dev, max_dev, infeasible_rate, wallclock_s and
/// the estimator quantities. wallclock_s is null unless `with_timing`, which
/// keeps repeated runs byte-identical.
std::string summary_json(const CampaignReport& report, bool with_timing = false);

}  // namespace stochcbf

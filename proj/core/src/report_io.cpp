#include "stochcbf/report_io.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "stochcbf/errors.hpp"

namespace stochcbf {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

void write_trajectory_csv(std::ostream& out, const PreparedScenario& scenario, const Trajectory& traj, int replicate) {
    out << "t,replicate,agent,px,py,vx,vy,ux,uy,h_min,feasible\n";
    const int agents = scenario.agent_count();
    const bool collision = scenario.collision() != nullptr;
    for (std::size_t r = 0; r < traj.states.size(); ++r) {
        const Eigen::VectorXd& x = traj.states[r];
        const Eigen::VectorXd h = scenario.agent_margins(x);
        const bool has_input = r < traj.inputs.size();
        const std::string t = format_double(traj.times[r]);
        for (int a = 0; a < agents; ++a) {
            out << t << ',' << replicate << ',' << a << ',';
            if (collision) {
                for (int c = 0; c < 4; ++c) out << format_double(x[4 * a + c]) << ',';
            } else {
                out << format_double(x[0]) << ",0,0,0,";
            }
            if (has_input) {
                const Eigen::VectorXd& u = traj.inputs[r];
                if (collision)
                    out << format_double(u[2 * a]) << ',' << format_double(u[2 * a + 1]) << ',';
                else
                    out << format_double(u[0]) << ",0,";
            } else {
                out << ",,";
            }
            out << format_double(h[a]) << ',';
            if (has_input) out << (traj.feasible_flags[r] ? 1 : 0);
            out << '\n';
        }
    }
}

void write_report_csv(std::ostream& out, const CampaignReport& report) {
    out << "replicate,min_h,safe,mean_dev,max_dev,infeasible_steps,steps,max_estimation_error,failed\n";
    for (const ReplicateRecord& r : report.replicates) {
        out << r.replicate << ',' << format_double(r.min_margin) << ',' << (r.safe ? 1 : 0) << ','
            << format_double(r.mean_dev) << ',' << format_double(r.max_dev) << ',' << r.infeasible_steps << ','
            << r.steps << ',' << format_double(r.max_estimation_error) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

void write_series_csv(std::ostream& out, const CampaignReport& report) {
    out << "t,replicate,min_h\n";
    const double dt = report.config.dt;
    for (const ReplicateRecord& r : report.replicates)
        for (std::size_t k = 0; k < r.min_margin_series.size(); ++k)
            out << format_double(static_cast<double>(k * report.series_stride) * dt) << ',' << r.replicate << ','
                << format_double(r.min_margin_series[k]) << '\n';
}

std::string summary_json(const CampaignReport& report, bool with_timing) {
    using json = nlohmann::ordered_json;
    auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json doc = json::object();
    doc["config"] = json::parse(config_to_json(report.config));
    doc["replicates"] = report.replicates.size();
    doc["state_source"] = uses_estimate(report.config.mode) ? "ekf_estimate" : "true_state";
    doc["tol_safety"] = report.config.effective_tol_safety();
    doc["violation_count"] = report.violation_count;
    doc["safety_fraction"] = number(report.safety_fraction);
    doc["wilson_lo"] = number(report.wilson_lo);
    doc["wilson_hi"] = number(report.wilson_hi);
    doc["mean_dev"] = number(report.mean_dev);
    doc["max_dev"] = number(report.max_dev);
    doc["infeasible_rate"] = number(report.infeasible_rate);
    double min_margin = std::numeric_limits<double>::infinity();
    std::size_t failed = 0;
    for (const ReplicateRecord& r : report.replicates) {
        min_margin = std::min(min_margin, r.min_margin);
        if (r.failed) ++failed;
    }
    doc["min_h"] = number(min_margin);
    doc["failed_replicates"] = failed;
    if (report.error_radius) {
        doc["lambda_star"] = number(report.error_radius->lambda_star);
        doc["gamma"] = number(report.error_radius->gamma);
        doc["hbar_gamma"] = number(report.error_radius->hbar_gamma);
        doc["exceedance_fraction"] = report.exceedance_fraction ? number(*report.exceedance_fraction) : json(nullptr);
    }
    doc["wallclock_s"] = with_timing ? number(report.wallclock_s) : json(nullptr);
    return doc.dump(2) + "\n";
}

}  // namespace stochcbf

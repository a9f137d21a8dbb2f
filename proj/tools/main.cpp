#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochcbf/campaign.hpp"
#include "stochcbf/config.hpp"
#include "stochcbf/errors.hpp"
#include "stochcbf/report_io.hpp"
#include "stochcbf_verify/criteria.hpp"

namespace fs = std::filesystem;
using namespace stochcbf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheckFailed = 3;

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

int cmd_simulate(const std::string& config_path, int replicate, std::size_t stride, const std::string& out_path) {
    const PreparedScenario prepared(load_config(config_path));
    if (replicate >= prepared.config().replicates)
        throw ConfigError("simulate: replicate must be below the configured replicate count");
    const Trajectory traj = prepared.run(replicate, stride);
    std::ostringstream csv;
    write_trajectory_csv(csv, prepared, traj, replicate);
    if (out_path.empty() || out_path == "-")
        std::cout << csv.str();
    else
        write_file(out_path, csv.str());
    std::fprintf(stderr, "replicate %d: %zu steps, min_h %.6g, infeasible steps %zu\n", replicate, traj.summary.steps,
                 traj.summary.min_margin, traj.summary.infeasible_steps);
    return kExitOk;
}

struct CampaignArgs {
    std::string config;
    std::string out_dir;
    std::string csv;
    std::string json;
    unsigned threads = 0;
    bool series = false;
    std::size_t series_stride = 100;
    bool timing = false;
};

int cmd_campaign(const CampaignArgs& args) {
    const ScenarioConfig cfg = load_config(args.config);
    CampaignOptions opt;
    opt.threads = args.threads;
    opt.keep_series = args.series;
    opt.series_stride = args.series_stride;
    const CampaignReport report = run_campaign(cfg, opt);

    const fs::path dir = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
    const fs::path csv_path = args.csv.empty() ? dir / "report.csv" : fs::path(args.csv);
    const fs::path json_path = args.json.empty() ? dir / "summary.json" : fs::path(args.json);
    std::ostringstream csv;
    write_report_csv(csv, report);
    write_file(csv_path, csv.str());
    write_file(json_path, summary_json(report, args.timing));
    if (args.series) {
        std::ostringstream series;
        write_series_csv(series, report);
        write_file(dir / "series.csv", series.str());
    }
    std::fprintf(stderr, "%s: %d/%zu violations, safety fraction %.4f [%.4f, %.4f], mean_dev %.4g, %.2fs\n",
                 to_string(cfg.mode), report.violation_count, report.replicates.size(), report.safety_fraction,
                 report.wilson_lo, report.wilson_hi, report.mean_dev, report.wallclock_s);
    return kExitOk;
}

int cmd_check(bool all, const std::vector<int>& ids, unsigned threads, const std::string& self) {
    std::vector<int> selected = ids;
    if (selected.empty()) selected = all ? verify::all_criteria() : verify::quick_criteria();
    verify::CriteriaOptions opt;
    opt.threads = threads;
    opt.cli_path = self;
    bool ok = true;
    for (int id : selected) {
        const verify::CriterionResult r = verify::run_criterion(id, opt);
        std::cout << verify::format_result(r) << std::flush;
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitCheckFailed;
}

std::string self_path(const char* argv0) {
    std::error_code ec;
    const fs::path p = fs::read_symlink("/proc/self/exe", ec);
    return ec ? std::string(argv0) : p.string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic control barrier function safety filters: simulation, campaigns and checks"};
    app.require_subcommand(1);

    std::string sim_config, sim_out;
    int sim_replicate = 0;
    std::size_t sim_stride = 1;
    auto* sim = app.add_subcommand("simulate", "One closed-loop run to a trajectory CSV");
    sim->add_option("-c,--config", sim_config, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("-r,--replicate", sim_replicate, "Replicate index (RNG stream)")->check(CLI::NonNegativeNumber);
    sim->add_option("-s,--stride", sim_stride, "Write every k-th step")->check(CLI::PositiveNumber);
    sim->add_option("-o,--out", sim_out, "Output CSV (default stdout)");

    CampaignArgs camp;
    auto* campaign = app.add_subcommand("campaign", "Seeded replicates to report.csv and summary.json");
    campaign->add_option("-c,--config", camp.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
    campaign->add_option("-d,--out-dir", camp.out_dir, "Output directory (default .)");
    campaign->add_option("--csv", camp.csv, "Report CSV path (overrides --out-dir)");
    campaign->add_option("--json", camp.json, "Summary JSON path (overrides --out-dir)");
    campaign->add_option("-j,--threads", camp.threads, "Worker threads, 0 for all cores");
    campaign->add_flag("--series", camp.series, "Also write series.csv with the min-margin series");
    campaign->add_option("--series-stride", camp.series_stride, "Series sampling stride in steps")
        ->check(CLI::PositiveNumber);
    campaign->add_flag("--timing", camp.timing, "Record wallclock_s in the summary (breaks byte-identity)");

    bool check_all = false;
    std::vector<int> check_ids;
    unsigned check_threads = 0;
    auto* check = app.add_subcommand("check", "Run the oracle and acceptance checks");
    check->add_flag("--all", check_all, "Include the long Monte Carlo campaigns");
    check->add_option("--criteria", check_ids, "Criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 9));
    check->add_option("-j,--threads", check_threads, "Worker threads, 0 for all cores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(sim_config, sim_replicate, sim_stride, sim_out);
        if (*campaign) return cmd_campaign(camp);
        return cmd_check(check_all, check_ids, check_threads, self_path(argv[0]));
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

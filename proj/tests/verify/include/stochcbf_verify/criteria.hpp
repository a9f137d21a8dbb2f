#pragma once

#include <string>
#include <vector>

namespace stochcbf::verify {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    /// Measured quantities, one "key=value" group per line.
    std::vector<std::string> details;
    double seconds = 0.0;
};

struct CriteriaOptions {
    /// Campaign worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;
    /// stochcbf executable used for the end-to-end determinism check; empty
    /// skips that half of criterion 8.
    std::string cli_path;
};

/// Criteria 1..9.
std::vector<int> all_criteria();
/// The ones that finish in seconds (no long Monte Carlo campaigns).
std::vector<int> quick_criteria();

/// Throws std::out_of_range for an unknown id.
CriterionResult run_criterion(int id, const CriteriaOptions& options);

/// "PASS criterion 4 (title): seconds" followed by indented details.
std::string format_result(const CriterionResult& result);

}  // namespace stochcbf::verify

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msd/measures.hpp"

namespace msd {

struct Check {
    std::string name;
    std::string expected;
    double measured;
    std::string tolerance;
    bool pass;
};

struct CriterionResult {
    int id;
    std::string title;
    std::vector<Check> checks;
    std::vector<std::string> notes;
    double seconds = 0.0;

    bool passed() const;
};

enum class Suite { quick, full };

struct SuiteOptions {
    Suite suite = Suite::quick;
    std::uint64_t seed = 0;
    std::vector<int> only;  // criterion ids to run; empty runs all
};

inline constexpr int kCriterionCount = 11;

/// Monte-Carlo sample size per curve: 10^5 for quick, 10^6 for full.
Index suite_samples(Suite suite);

CriterionResult run_criterion(int id, const SuiteOptions& options);

/// Runs the selected criteria in order; progress lines go to `progress` when
/// it is non-null.
std::vector<CriterionResult> run_acceptance(const SuiteOptions& options, std::ostream* progress = nullptr);

/// Table of (check, expected, measured, tolerance, PASS/FAIL) rows followed
/// by one summary line per criterion.
void print_report(std::ostream& out, const std::vector<CriterionResult>& results);

/// Local maxima of a Gaussian KDE on a regular grid whose height is at least
/// min_relative_height of the tallest one.
int kde_mode_count(const Eigen::ArrayXd& samples, double bandwidth, double min_relative_height = 0.02);

/// Same count for the measure's own density convolved with N(0, bandwidth^2).
int smoothed_mode_count(const Measure& m, double lo, double hi, double bandwidth,
                        double min_relative_height = 0.02);

}  // namespace msd

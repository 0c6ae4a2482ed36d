#pragma once

#include "morphlearn/records.hpp"
#include "morphlearn/stats.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace morphlearn {

// Fitness curves of one (framework, robot) pair, keyed by repetition; each
// curve is ordered by evaluation index.
using CurveSet = std::map<std::size_t, std::vector<double>>;

// Throws Error when indices inside a cell are not dense 1..n.
CurveSet cell_curves(const std::vector<EvaluationRecord>& records, const std::string& framework,
                     const std::string& robot);

std::vector<std::string> frameworks_in(const std::vector<EvaluationRecord>& records);
std::vector<std::string> robots_in(const std::vector<EvaluationRecord>& records);

std::vector<double> running_best(const std::vector<double>& curve);

// Mean over repetitions of the maximum fitness. An empty robot means every
// robot: the mean over all (robot, repetition) cells.
double efficacy(const std::vector<EvaluationRecord>& records, const std::string& framework,
                const std::string& robot = {});

// First 1-based evaluation whose running best reaches `threshold`, or
// budget + 1 if it never does.
std::size_t evaluations_to_threshold(const std::vector<double>& curve, double threshold, std::size_t budget);

// Mean of evaluations_to_threshold over every matching cell. budget 0 takes
// the longest curve as the budget.
double efficiency(const std::vector<EvaluationRecord>& records, const std::string& framework, double threshold,
                  const std::string& robot = {}, std::size_t budget = 0);

// Mean running-best curve over the repetitions of a (framework, robot) pair.
std::vector<double> mean_running_best(const std::vector<EvaluationRecord>& records, const std::string& framework,
                                      const std::string& robot);

// Dotted-line reading: the level is the final value of the reference
// framework's mean running-best curve; `evaluations` is the first index at
// which the other framework's mean curve reaches it (budget + 1 if never).
struct LevelCrossing {
    std::string reference;
    std::string other;
    std::string robot;
    double level = 0.0;
    std::size_t evaluations = 0;
};

LevelCrossing evaluations_to_level(const std::vector<EvaluationRecord>& records, const std::string& reference,
                                   const std::string& other, const std::string& robot);

struct RobustnessResult {
    std::map<std::string, double> per_robot_efficacy;
    double variance = 0.0;
};

// Variance across robots of per-robot efficacy; population (divide by n) by
// default.
RobustnessResult robustness(const std::vector<EvaluationRecord>& records, const std::string& framework,
                            bool population = true);

// Per-evaluation mean of the running best over repetitions, with a
// mean +- 1.96 * sd / sqrt(reps) band (sample sd).
struct Band {
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
};

Band confidence_band(const std::vector<EvaluationRecord>& records, const std::string& framework,
                     const std::string& robot);

// OLS of per-robot efficacy on the controller parameter count of each robot.
Regression param_fitness_regression(const std::vector<EvaluationRecord>& records, const std::string& framework,
                                    const std::map<std::string, std::size_t>& param_counts);

struct FrameworkComparison {
    std::string first;
    std::string second;
    std::string robot;
    RankSumResult test;
    std::string winner; // framework name or "tie"
};

inline constexpr double kSignificanceLevel = 0.05;

// Two-sided rank-sum test on per-repetition maxima for every framework pair.
std::vector<FrameworkComparison> compare_frameworks(const std::vector<EvaluationRecord>& records,
                                                    const std::string& robot);

struct FiveNumber {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Summary over repetitions of the best fitness found by `evaluation`.
FiveNumber boxplot_at(const std::vector<EvaluationRecord>& records, const std::string& framework,
                      const std::string& robot, std::size_t evaluation);

inline constexpr std::size_t kBoxplotEvaluations[] = {200, 600, 1000};

// Plain-text report. Parameter counts are keyed by framework, then robot;
// the regression section is skipped for frameworks without counts.
std::string metrics_report(const std::vector<EvaluationRecord>& records,
                           const std::map<std::string, std::map<std::string, std::size_t>>& param_counts = {});

// One file per series under `dir`; returns the written paths.
std::vector<std::filesystem::path> write_plot_data(const std::vector<EvaluationRecord>& records,
                                                   const std::filesystem::path& dir);

} // namespace morphlearn

#pragma once

#include <span>
#include <vector>

namespace morphlearn {

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    // Pearson correlation; 0 when ys has no variance.
    double r = 0.0;
};

// Ordinary least squares fit ys ~ slope * xs + intercept.
Regression linear_regression(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> xs);
// Population (divide-by-n) variance.
double population_variance(std::span<const double> xs);
// Sample (divide-by-(n-1)) standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> xs);
double median(std::vector<double> xs);
// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

struct RankSumResult {
    double u1 = 0.0;         // U statistic of the first sample
    double u2 = 0.0;
    double z = 0.0;          // normal approximation, tie-corrected, no continuity correction
    double p_normal = 1.0;   // two-sided
    double p_exact = -1.0;   // two-sided exact permutation p; -1 when not computed
};

// Two-sided Mann-Whitney U (Wilcoxon rank-sum) test. The exact p-value is
// computed only for tie-free samples with n1 + n2 <= 20.
RankSumResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Standard normal CDF.
double normal_cdf(double z);

} // namespace morphlearn

#include "morphlearn/stats.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morphlearn {

Regression linear_regression(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size())
        throw DimensionError("linear_regression: xs and ys differ in length");
    if (xs.size() < 2)
        throw ConfigError("linear_regression: need at least two points");

    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw ConfigError("linear_regression: degenerate xs (all equal)");

    Regression fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
    return fit;
}

double mean(std::span<const double> xs)
{
    if (xs.empty())
        throw DimensionError("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_variance(std::span<const double> xs)
{
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs)
{
    if (xs.size() < 2)
        return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double q)
{
    if (xs.empty())
        throw DimensionError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// counts[u] = number of orderings of n1 + n2 distinct values whose first
// sample has rank-sum statistic U = u.
std::vector<double> u_distribution(std::size_t n1, std::size_t n2)
{
    // table[i][j] holds the distribution for sizes (i, j).
    std::vector<std::vector<std::vector<double>>> table(
        n1 + 1, std::vector<std::vector<double>>(n2 + 1));
    for (std::size_t i = 0; i <= n1; ++i) {
        for (std::size_t j = 0; j <= n2; ++j) {
            auto& d = table[i][j];
            d.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                d[0] = 1.0;
                continue;
            }
            // Largest value belongs to sample one (adds j to U) or sample two.
            const auto& a = table[i - 1][j];
            for (std::size_t u = 0; u < a.size(); ++u)
                d[u + j] += a[u];
            const auto& b = table[i][j - 1];
            for (std::size_t u = 0; u < b.size(); ++u)
                d[u] += b[u];
        }
    }
    return table[n1][n2];
}

} // namespace

RankSumResult mann_whitney_u(std::span<const double> a, std::span<const double> b)
{
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    if (n1 == 0 || n2 == 0)
        throw DimensionError("mann_whitney_u: empty sample");

    struct Item {
        double value;
        int group;
    };
    std::vector<Item> all;
    all.reserve(n1 + n2);
    for (double v : a)
        all.push_back({v, 0});
    for (double v : b)
        all.push_back({v, 1});
    std::stable_sort(all.begin(), all.end(),
                     [](const Item& x, const Item& y) { return x.value < y.value; });

    // Average ranks for ties.
    const std::size_t n = all.size();
    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    bool has_ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && all[j + 1].value == all[i].value)
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1) {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        for (std::size_t k = i; k <= j; ++k)
            if (all[k].group == 0)
                rank_sum_a += avg_rank;
        i = j + 1;
    }

    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    const double dn = dn1 + dn2;

    RankSumResult res;
    res.u1 = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
    res.u2 = dn1 * dn2 - res.u1;

    const double mu = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        res.z = 0.0;
        res.p_normal = 1.0;
    } else {
        res.z = (res.u1 - mu) / std::sqrt(var);
        res.p_normal = std::min(1.0, 2.0 * normal_cdf(-std::abs(res.z)));
    }

    if (!has_ties && n1 + n2 <= 20) {
        const auto dist = u_distribution(n1, n2);
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const auto u = static_cast<std::size_t>(std::llround(res.u1));
        double le = 0.0, ge = 0.0;
        for (std::size_t k = 0; k < dist.size(); ++k) {
            if (k <= u)
                le += dist[k];
            if (k >= u)
                ge += dist[k];
        }
        res.p_exact = std::min(1.0, 2.0 * std::min(le, ge) / total);
    }
    return res;
}

} // namespace morphlearn

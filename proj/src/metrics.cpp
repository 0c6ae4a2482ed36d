#include "morphlearn/metrics.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace morphlearn {

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_exact(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double curve_max(const std::vector<double>& curve)
{
    return *std::max_element(curve.begin(), curve.end());
}

std::vector<double> rep_maxima(const CurveSet& cells)
{
    std::vector<double> out;
    for (const auto& [rep, curve] : cells)
        out.push_back(curve_max(curve));
    return out;
}

CurveSet require_cells(const std::vector<EvaluationRecord>& records, const std::string& framework,
                       const std::string& robot)
{
    CurveSet cells = cell_curves(records, framework, robot);
    if (cells.empty())
        throw Error("no records for framework '" + framework + "' on robot '" + robot + "'");
    return cells;
}

std::size_t longest(const CurveSet& cells)
{
    std::size_t n = 0;
    for (const auto& [rep, curve] : cells)
        n = std::max(n, curve.size());
    return n;
}

} // namespace

CurveSet cell_curves(const std::vector<EvaluationRecord>& records, const std::string& framework,
                     const std::string& robot)
{
    std::map<std::size_t, std::vector<const EvaluationRecord*>> grouped;
    for (const auto& r : records)
        if (r.framework == framework && r.robot == robot)
            grouped[r.repetition].push_back(&r);
    CurveSet out;
    for (auto& [rep, rows] : grouped) {
        std::sort(rows.begin(), rows.end(),
                  [](const EvaluationRecord* a, const EvaluationRecord* b) { return a->evaluation < b->evaluation; });
        std::vector<double> curve;
        curve.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i]->evaluation != i + 1)
                throw Error("evaluation indices are not dense in cell " + framework + "/" + robot + "/"
                            + std::to_string(rep));
            curve.push_back(rows[i]->fitness);
        }
        out.emplace(rep, std::move(curve));
    }
    return out;
}

std::vector<std::string> frameworks_in(const std::vector<EvaluationRecord>& records)
{
    std::set<std::string> s;
    for (const auto& r : records)
        s.insert(r.framework);
    return {s.begin(), s.end()};
}

std::vector<std::string> robots_in(const std::vector<EvaluationRecord>& records)
{
    std::set<std::string> s;
    for (const auto& r : records)
        s.insert(r.robot);
    return {s.begin(), s.end()};
}

std::vector<double> running_best(const std::vector<double>& curve)
{
    std::vector<double> out(curve.size());
    double best = -INFINITY;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        best = std::max(best, curve[i]);
        out[i] = best;
    }
    return out;
}

double efficacy(const std::vector<EvaluationRecord>& records, const std::string& framework, const std::string& robot)
{
    std::vector<double> maxima;
    if (robot.empty()) {
        for (const auto& name : robots_in(records)) {
            const auto m = rep_maxima(cell_curves(records, framework, name));
            maxima.insert(maxima.end(), m.begin(), m.end());
        }
    } else {
        maxima = rep_maxima(cell_curves(records, framework, robot));
    }
    if (maxima.empty())
        throw Error("efficacy: no records for framework '" + framework + "'");
    return mean(maxima);
}

std::size_t evaluations_to_threshold(const std::vector<double>& curve, double threshold, std::size_t budget)
{
    double best = -INFINITY;
    for (std::size_t i = 0; i < curve.size() && i < budget; ++i) {
        best = std::max(best, curve[i]);
        if (best >= threshold)
            return i + 1;
    }
    return budget + 1;
}

double efficiency(const std::vector<EvaluationRecord>& records, const std::string& framework, double threshold,
                  const std::string& robot, std::size_t budget)
{
    if (!(threshold > 0.0))
        throw ConfigError("efficiency threshold must be positive");
    std::vector<CurveSet> sets;
    if (robot.empty()) {
        for (const auto& name : robots_in(records))
            sets.push_back(cell_curves(records, framework, name));
    } else {
        sets.push_back(cell_curves(records, framework, robot));
    }
    std::size_t cap = budget;
    if (cap == 0)
        for (const auto& s : sets)
            cap = std::max(cap, longest(s));
    std::vector<double> hits;
    for (const auto& s : sets)
        for (const auto& [rep, curve] : s)
            hits.push_back(static_cast<double>(evaluations_to_threshold(curve, threshold, cap)));
    if (hits.empty())
        throw Error("efficiency: no records for framework '" + framework + "'");
    return mean(hits);
}

std::vector<double> mean_running_best(const std::vector<EvaluationRecord>& records, const std::string& framework,
                                      const std::string& robot)
{
    return confidence_band(records, framework, robot).mean;
}

LevelCrossing evaluations_to_level(const std::vector<EvaluationRecord>& records, const std::string& reference,
                                   const std::string& other, const std::string& robot)
{
    const auto ref = mean_running_best(records, reference, robot);
    const auto oth = mean_running_best(records, other, robot);
    LevelCrossing out{reference, other, robot, ref.back(), 0};
    out.evaluations = evaluations_to_threshold(oth, out.level, oth.size());
    return out;
}

RobustnessResult robustness(const std::vector<EvaluationRecord>& records, const std::string& framework,
                            bool population)
{
    RobustnessResult out;
    std::vector<double> values;
    for (const auto& name : robots_in(records)) {
        const CurveSet cells = cell_curves(records, framework, name);
        if (cells.empty())
            continue;
        const double e = mean(rep_maxima(cells));
        out.per_robot_efficacy[name] = e;
        values.push_back(e);
    }
    if (values.size() < 2)
        throw Error("robustness needs at least two robots for framework '" + framework + "'");
    out.variance = population_variance(values);
    if (!population)
        out.variance *= static_cast<double>(values.size()) / static_cast<double>(values.size() - 1);
    return out;
}

Band confidence_band(const std::vector<EvaluationRecord>& records, const std::string& framework,
                     const std::string& robot)
{
    const CurveSet cells = require_cells(records, framework, robot);
    std::vector<std::vector<double>> best;
    const std::size_t n = cells.begin()->second.size();
    for (const auto& [rep, curve] : cells) {
        if (curve.size() != n)
            throw Error("confidence band: repetitions of " + framework + "/" + robot + " differ in length");
        best.push_back(running_best(curve));
    }
    Band band;
    const double reps = static_cast<double>(best.size());
    std::vector<double> column(best.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < best.size(); ++r)
            column[r] = best[r][i];
        const double m = mean(column);
        const double half = 1.96 * sample_stddev(column) / std::sqrt(reps);
        band.mean.push_back(m);
        band.lower.push_back(m - half);
        band.upper.push_back(m + half);
    }
    return band;
}

Regression param_fitness_regression(const std::vector<EvaluationRecord>& records, const std::string& framework,
                                    const std::map<std::string, std::size_t>& param_counts)
{
    std::vector<double> xs, ys;
    for (const auto& name : robots_in(records)) {
        const CurveSet cells = cell_curves(records, framework, name);
        if (cells.empty())
            continue;
        const auto it = param_counts.find(name);
        if (it == param_counts.end())
            throw Error("no parameter count for robot '" + name + "'");
        xs.push_back(static_cast<double>(it->second));
        ys.push_back(mean(rep_maxima(cells)));
    }
    return linear_regression(xs, ys);
}

std::vector<FrameworkComparison> compare_frameworks(const std::vector<EvaluationRecord>& records,
                                                    const std::string& robot)
{
    const auto names = frameworks_in(records);
    std::map<std::string, std::vector<double>> maxima;
    for (const auto& fw : names) {
        const CurveSet cells = cell_curves(records, fw, robot);
        if (cells.empty())
            continue;
        if (cells.size() < 2)
            throw Error("compare_frameworks needs at least two repetitions of " + fw + " on " + robot);
        maxima[fw] = rep_maxima(cells);
    }
    std::vector<FrameworkComparison> out;
    for (auto a = maxima.begin(); a != maxima.end(); ++a) {
        for (auto b = std::next(a); b != maxima.end(); ++b) {
            FrameworkComparison c{a->first, b->first, robot, mann_whitney_u(a->second, b->second), "tie"};
            if (c.test.p_normal < kSignificanceLevel)
                c.winner = c.test.u1 > c.test.u2 ? a->first : b->first;
            out.push_back(std::move(c));
        }
    }
    return out;
}

FiveNumber boxplot_at(const std::vector<EvaluationRecord>& records, const std::string& framework,
                      const std::string& robot, std::size_t evaluation)
{
    const CurveSet cells = require_cells(records, framework, robot);
    std::vector<double> values;
    for (const auto& [rep, curve] : cells) {
        if (evaluation == 0 || evaluation > curve.size())
            throw Error("boxplot evaluation " + std::to_string(evaluation) + " outside the run");
        values.push_back(*std::max_element(curve.begin(), curve.begin() + static_cast<std::ptrdiff_t>(evaluation)));
    }
    return FiveNumber{quantile(values, 0.0), quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75),
                      quantile(values, 1.0)};
}

std::string metrics_report(const std::vector<EvaluationRecord>& records,
                           const std::map<std::string, std::map<std::string, std::size_t>>& param_counts)
{
    std::ostringstream out;
    const auto fws = frameworks_in(records);
    const auto robots = robots_in(records);
    out << "records: " << records.size() << "\n";
    out << "frameworks: " << fws.size() << "\nrobots: " << robots.size() << "\n\n";

    out << "[efficacy] mean over repetitions of max fitness (cm/s)\n";
    for (const auto& fw : fws) {
        for (const auto& robot : robots) {
            const CurveSet cells = cell_curves(records, fw, robot);
            if (cells.empty())
                continue;
            out << fw << " " << robot << " reps=" << cells.size() << " efficacy=" << fmt(mean(rep_maxima(cells)))
                << "\n";
        }
        out << fw << " all efficacy=" << fmt(efficacy(records, fw)) << "\n";
    }

    out << "\n[efficiency] evaluations for the mean running best to reach the reference level\n";
    for (const auto& robot : robots) {
        for (const auto& ref : fws) {
            if (cell_curves(records, ref, robot).empty())
                continue;
            for (const auto& other : fws) {
                if (other == ref || cell_curves(records, other, robot).empty())
                    continue;
                const LevelCrossing c = evaluations_to_level(records, ref, other, robot);
                out << robot << " level(" << ref << ")=" << fmt(c.level) << " " << other
                    << " evaluations=" << c.evaluations
                    << " mean-per-rep=" << (c.level > 0.0 ? fmt(efficiency(records, other, c.level, robot)) : "n/a")
                    << "\n";
            }
        }
    }

    out << "\n[robustness] population variance across robots of per-robot efficacy\n";
    for (const auto& fw : fws) {
        std::size_t count = 0;
        for (const auto& robot : robots)
            count += cell_curves(records, fw, robot).empty() ? 0 : 1;
        if (count < 2) {
            out << fw << " variance=n/a (fewer than two robots)\n";
            continue;
        }
        out << fw << " variance=" << fmt(robustness(records, fw).variance) << "\n";
    }

    if (!param_counts.empty()) {
        out << "\n[parameters] OLS of per-robot efficacy on parameter count\n";
        for (const auto& fw : fws) {
            const auto it = param_counts.find(fw);
            if (it == param_counts.end())
                continue;
            try {
                const Regression r = param_fitness_regression(records, fw, it->second);
                out << fw << " slope=" << fmt(r.slope) << " intercept=" << fmt(r.intercept) << " r=" << fmt(r.r)
                    << "\n";
            } catch (const Error& e) {
                out << fw << " regression=n/a (" << e.what() << ")\n";
            }
        }
    }

    out << "\n[significance] two-sided Mann-Whitney U on per-repetition max fitness, alpha=0.05"
           " (test choice is a reconstruction)\n";
    for (const auto& robot : robots) {
        try {
            for (const auto& c : compare_frameworks(records, robot)) {
                out << robot << " " << c.first << " vs " << c.second << " U=" << fmt(c.test.u1)
                    << " p=" << fmt(c.test.p_normal);
                if (c.test.p_exact >= 0.0)
                    out << " p_exact=" << fmt(c.test.p_exact);
                out << " winner=" << c.winner << "\n";
            }
        } catch (const Error& e) {
            out << robot << " comparison=n/a (" << e.what() << ")\n";
        }
    }
    return out.str();
}

std::vector<std::filesystem::path> write_plot_data(const std::vector<EvaluationRecord>& records,
                                                   const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& header, const std::vector<double>& series) {
        const auto path = dir / name;
        std::ofstream f(path);
        if (!f)
            throw Error("cannot write " + path.string());
        f << "evaluation," << header << "\n";
        for (std::size_t i = 0; i < series.size(); ++i)
            f << i + 1 << "," << fmt_exact(series[i]) << "\n";
        written.push_back(path);
    };
    for (const auto& fw : frameworks_in(records)) {
        for (const auto& robot : robots_in(records)) {
            const CurveSet cells = cell_curves(records, fw, robot);
            if (cells.empty())
                continue;
            const std::string stem = fw + "_" + robot;
            const Band band = confidence_band(records, fw, robot);
            emit("mean_" + stem + ".csv", "mean_best", band.mean);
            emit("lower_" + stem + ".csv", "lower_95", band.lower);
            emit("upper_" + stem + ".csv", "upper_95", band.upper);

            const auto path = dir / ("boxplot_" + stem + ".csv");
            std::ofstream f(path);
            if (!f)
                throw Error("cannot write " + path.string());
            f << "evaluation,min,q1,median,q3,max\n";
            for (std::size_t e : kBoxplotEvaluations) {
                if (e > longest(cells))
                    continue;
                const FiveNumber b = boxplot_at(records, fw, robot, e);
                f << e << "," << fmt_exact(b.min) << "," << fmt_exact(b.q1) << "," << fmt_exact(b.median) << ","
                  << fmt_exact(b.q3) << "," << fmt_exact(b.max) << "\n";
            }
            written.push_back(path);
        }
    }
    return written;
}

} // namespace morphlearn

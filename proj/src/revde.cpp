#include "morphlearn/revde.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace morphlearn {

std::size_t RevdeConfig::scheduled_evaluations() const noexcept
{
    return population + new_candidates * (iterations > 0 ? iterations - 1 : 0);
}

std::size_t RevdeConfig::evaluation_cap() const noexcept
{
    return budget == 0 ? scheduled_evaluations() : std::min(budget, scheduled_evaluations());
}

void RevdeConfig::validate() const
{
    if (population < 3)
        throw ConfigError("RevDE population must be at least 3");
    if (new_candidates == 0 || new_candidates % 3 != 0)
        throw ConfigError("RevDE new_candidates must be a positive multiple of 3");
    if (top_samples < 3 || top_samples > population + new_candidates)
        throw ConfigError("RevDE top_samples must lie in [3, population + new_candidates]");
    if (!(crossover > 0.0 && crossover <= 1.0))
        throw ConfigError("RevDE crossover probability must lie in (0, 1]");
    if (!(scaling > 0.0))
        throw ConfigError("RevDE scaling factor must be positive");
    if (iterations == 0)
        throw ConfigError("RevDE needs at least one iteration");
    if (!(box.lo < box.hi))
        throw ConfigError("RevDE search box is empty");
}

RevdeConfig RevdeConfig::cpg_defaults() { return RevdeConfig{}; }

RevdeConfig RevdeConfig::ann_defaults()
{
    RevdeConfig c;
    c.population = 30;
    c.budget = 1000;
    return c;
}

namespace {

void require_same_length(std::size_t a, std::size_t b, std::size_t c)
{
    if (a != b || a != c)
        throw DimensionError("RevDE triplet members differ in length");
}

} // namespace

std::array<std::vector<double>, 3> revde_mutate(std::span<const double> wi, std::span<const double> wj,
                                               std::span<const double> wk, double f)
{
    require_same_length(wi.size(), wj.size(), wk.size());
    const std::size_t d = wi.size();
    std::array<std::vector<double>, 3> v{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t n = 0; n < d; ++n) {
        v[0][n] = wi[n] + f * (wj[n] - wk[n]);
        v[1][n] = wj[n] + f * (wk[n] - v[0][n]);
        v[2][n] = wk[n] + f * (v[0][n] - v[1][n]);
    }
    return v;
}

std::array<std::vector<double>, 3> revde_unmutate(std::span<const double> v1, std::span<const double> v2,
                                                 std::span<const double> v3, double f)
{
    require_same_length(v1.size(), v2.size(), v3.size());
    const std::size_t d = v1.size();
    std::array<std::vector<double>, 3> w{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t n = 0; n < d; ++n) {
        w[2][n] = v3[n] - f * (v1[n] - v2[n]);
        w[1][n] = v2[n] - f * (w[2][n] - v1[n]);
        w[0][n] = v1[n] - f * (w[1][n] - w[2][n]);
    }
    return w;
}

std::vector<double> uniform_crossover(std::span<const double> parent, std::span<const double> mutant,
                                      double crossover, RngStream& rng, const SearchBox& box)
{
    if (parent.size() != mutant.size())
        throw DimensionError("crossover: parent and mutant differ in length");
    std::vector<double> u(parent.size());
    for (std::size_t n = 0; n < u.size(); ++n)
        u[n] = box.clamp(rng.bernoulli(crossover) ? mutant[n] : parent[n]);
    return u;
}

std::vector<Candidate> select_top(std::vector<Candidate> pool, std::size_t mu)
{
    if (pool.size() < mu)
        throw ConfigError("select_top: pool of " + std::to_string(pool.size()) + " cannot supply "
                          + std::to_string(mu) + " members");
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) { return a.fitness > b.fitness; });
    pool.resize(mu);
    return pool;
}

RevdeResult run_revde(const Objective& objective, std::size_t dimension, const RevdeConfig& config,
                      RngStream& rng, const RecordLabel& label)
{
    config.validate();
    if (dimension == 0)
        throw DimensionError("RevDE needs a non-empty genome");
    const std::size_t cap = config.evaluation_cap();

    RevdeResult result;
    result.best_fitness = -std::numeric_limits<double>::infinity();
    result.history.reserve(cap);

    auto evaluate = [&](std::vector<double> genome) -> Candidate {
        double f = objective(genome);
        bool flagged = false;
        if (!std::isfinite(f)) {
            f = 0.0;
            flagged = true;
        }
        EvaluationRecord rec{label.framework, label.robot, label.repetition, result.history.size() + 1, f, flagged};
        result.history.push_back(std::move(rec));
        if (f > result.best_fitness) {
            result.best_fitness = f;
            result.best.values = genome;
        }
        return Candidate{std::move(genome), f};
    };

    std::vector<Candidate> population;
    for (std::size_t m = 0; m < config.population && result.history.size() < cap; ++m) {
        std::vector<double> g(dimension);
        for (double& v : g)
            v = rng.uniform(config.box.lo, config.box.hi);
        population.push_back(evaluate(std::move(g)));
    }
    const std::size_t initial = population.size();
    population = select_top(std::move(population), initial);
    result.iterations_run = 1;

    for (std::size_t it = 1; it < config.iterations && result.history.size() < cap; ++it) {
        const std::size_t parents = std::min(config.top_samples, population.size());
        if (parents < 3)
            throw ConfigError("RevDE needs at least three evaluated members to form a triplet");

        std::vector<Candidate> offspring;
        while (offspring.size() < config.new_candidates && result.history.size() < cap) {
            const auto i = static_cast<std::size_t>(rng.below(parents));
            std::size_t j = i, k = i;
            while (j == i)
                j = static_cast<std::size_t>(rng.below(parents));
            while (k == i || k == j)
                k = static_cast<std::size_t>(rng.below(parents));

            const auto& wi = population[i].genome;
            const auto& wj = population[j].genome;
            const auto& wk = population[k].genome;
            const auto mutants = revde_mutate(wi, wj, wk, config.scaling);
            const std::array<const std::vector<double>*, 3> seeds{&wi, &wj, &wk};
            // Crossover for all three before evaluating keeps the RNG stream
            // independent of the evaluation budget.
            std::array<std::vector<double>, 3> trial;
            for (std::size_t t = 0; t < 3; ++t)
                trial[t] = uniform_crossover(*seeds[t], mutants[t], config.crossover, rng, config.box);
            for (std::size_t t = 0; t < 3; ++t) {
                if (offspring.size() >= config.new_candidates || result.history.size() >= cap)
                    break;
                offspring.push_back(evaluate(std::move(trial[t])));
            }
        }

        std::vector<Candidate> pool = std::move(population);
        pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
        const std::size_t keep = std::min(config.population, pool.size());
        population = select_top(std::move(pool), keep);
        ++result.iterations_run;
    }
    return result;
}

} // namespace morphlearn

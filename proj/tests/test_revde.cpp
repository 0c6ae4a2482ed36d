#include "morphlearn/error.hpp"
#include "morphlearn/revde.hpp"

#include <doctest.h>

#include <cmath>

using namespace morphlearn;

namespace {

// Solves the 3x3 system M w = v for each gene, where M is the mutation map
// written as a matrix acting on (wi, wj, wk).
std::array<double, 3> solve3(const double m[3][3], const std::array<double, 3>& v)
{
    double a[3][4];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
            a[r][c] = m[r][c];
        a[r][3] = v[static_cast<std::size_t>(r)];
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        for (int k = 0; k < 4; ++k)
            std::swap(a[c][k], a[piv][k]);
        for (int r = 0; r < 3; ++r) {
            if (r == c)
                continue;
            const double f = a[r][c] / a[c][c];
            for (int k = 0; k < 4; ++k)
                a[r][k] -= f * a[c][k];
        }
    }
    return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

} // namespace

TEST_CASE("mutation hand case")
{
    const std::vector<double> wi{0, 0}, wj{1, 0}, wk{0, 1};
    const auto v = revde_mutate(wi, wj, wk, 0.5);
    CHECK(v[0] == std::vector<double>{0.5, -0.5});
    CHECK(v[1] == std::vector<double>{0.75, 0.75});
    CHECK(v[2] == std::vector<double>{-0.125, 0.375});
}

TEST_CASE("mutation is invertible")
{
    RngStream rng(8);
    const double F = 0.5;
    // v = M w with rows derived by expanding the recurrences.
    const double m[3][3] = {{1, F, -F},
                            {-F, 1 - F * F, F + F * F},
                            {F + F * F, -F + F * F * F + F * F, 1 - F * F - F * F * F - F * F}};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> wi(6), wj(6), wk(6);
        for (std::size_t g = 0; g < 6; ++g) {
            wi[g] = rng.uniform(-1, 1);
            wj[g] = rng.uniform(-1, 1);
            wk[g] = rng.uniform(-1, 1);
        }
        const auto v = revde_mutate(wi, wj, wk, F);
        const auto back = revde_unmutate(v[0], v[1], v[2], F);
        for (std::size_t g = 0; g < 6; ++g) {
            CHECK(std::abs(back[0][g] - wi[g]) <= 1e-12);
            CHECK(std::abs(back[1][g] - wj[g]) <= 1e-12);
            CHECK(std::abs(back[2][g] - wk[g]) <= 1e-12);
            const auto w = solve3(m, {v[0][g], v[1][g], v[2][g]});
            CHECK(std::abs(w[0] - wi[g]) <= 1e-12);
            CHECK(std::abs(w[1] - wj[g]) <= 1e-12);
            CHECK(std::abs(w[2] - wk[g]) <= 1e-12);
        }
    }
}

TEST_CASE("crossover statistics and edge rates")
{
    RngStream rng(21);
    const std::size_t n = 10000;
    const std::vector<double> parent(n, 0.0), mutant(n, 0.5);
    const SearchBox box;
    for (int m = 0; m < 100; ++m) {
        const auto child = uniform_crossover(parent, mutant, 0.9, rng, box);
        std::size_t from_mutant = 0;
        for (double x : child)
            from_mutant += x == 0.5;
        CHECK(std::abs(static_cast<double>(from_mutant) / n - 0.9) <= 0.01);
    }
    CHECK(uniform_crossover(parent, mutant, 0.0, rng, box) == parent);
    CHECK(uniform_crossover(parent, mutant, 1.0, rng, box) == mutant);
    const std::vector<double> wild(4, 3.0);
    CHECK(uniform_crossover(std::vector<double>(4, 0.0), wild, 1.0, rng, box) == std::vector<double>(4, 1.0));
}

TEST_CASE("select_top keeps the best with stable ties")
{
    std::vector<Candidate> pool{{{0}, 1.0}, {{1}, 3.0}, {{2}, 3.0}, {{3}, 2.0}};
    const auto top = select_top(pool, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].genome[0] == 1);
    CHECK(top[1].genome[0] == 2);
    CHECK(top[2].genome[0] == 3);
    CHECK_THROWS(select_top(pool, 5));
}

TEST_CASE("schedule emits exactly the budget")
{
    const RevdeConfig cpg = RevdeConfig::cpg_defaults();
    CHECK(cpg.scheduled_evaluations() == 1000);
    RngStream rng(1);
    std::size_t calls = 0;
    const auto r = run_revde([&](std::span<const double>) { return static_cast<double>(++calls); }, 18, cpg, rng,
                             {"cpg+revde", "spider", 1});
    CHECK(calls == 1000);
    REQUIRE(r.history.size() == 1000);
    for (std::size_t i = 0; i < r.history.size(); ++i)
        CHECK(r.history[i].evaluation == i + 1);
    CHECK(r.iterations_run == 34);

    const RevdeConfig ann = RevdeConfig::ann_defaults();
    CHECK(ann.evaluation_cap() == 1000);
    calls = 0;
    const auto ra = run_revde([&](std::span<const double>) { return 0.0 * static_cast<double>(++calls); }, 4, ann, rng);
    CHECK(calls == 1000);
    CHECK(ra.history.size() == 1000);
}

TEST_CASE("non-finite fitness is recorded as zero and flagged")
{
    RevdeConfig c;
    c.iterations = 2;
    RngStream rng(2);
    const auto r = run_revde([](std::span<const double> g) { return g[0] > 0 ? NAN : 1.0; }, 2, c, rng);
    bool any = false;
    for (const auto& rec : r.history) {
        if (rec.flagged) {
            any = true;
            CHECK(rec.fitness == 0.0);
        }
    }
    CHECK(any);
}

TEST_CASE("RevDE improves on a sphere")
{
    RngStream rng(77);
    const auto sphere = [](std::span<const double> g) {
        double s = 0;
        for (double x : g)
            s += (x - 0.3) * (x - 0.3);
        return -s;
    };
    const auto r = run_revde(sphere, 10, RevdeConfig::cpg_defaults(), rng);
    double first_best = -1e9;
    for (std::size_t i = 0; i < 10; ++i)
        first_best = std::max(first_best, r.history[i].fitness);
    CHECK(r.best_fitness > first_best);
    CHECK(r.best_fitness > -0.05);
    for (double x : r.best.values)
        CHECK(std::abs(x) <= 1.0);
}

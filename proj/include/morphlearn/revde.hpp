#pragma once

#include "morphlearn/genome.hpp"
#include "morphlearn/records.hpp"
#include "morphlearn/rng.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace morphlearn {

struct RevdeConfig {
    std::size_t population = 10;     // mu
    std::size_t new_candidates = 30; // per iteration, a multiple of 3
    std::size_t top_samples = 10;    // lambda: members that feed triplets
    double scaling = 0.5;            // F
    double crossover = 0.9;          // CR
    std::size_t iterations = 34;
    SearchBox box;
    // Hard cap on evaluations; 0 means the full schedule.
    std::size_t budget = 0;

    // mu + N_new * (iterations - 1)
    std::size_t scheduled_evaluations() const noexcept;
    std::size_t evaluation_cap() const noexcept;
    void validate() const;

    static RevdeConfig cpg_defaults();
    // mu = 30 with the same schedule; capped at 1000 evaluations.
    static RevdeConfig ann_defaults();
};

// Reversible differential mutation of a triplet:
//   v1 = wi + F (wj - wk); v2 = wj + F (wk - v1); v3 = wk + F (v1 - v2).
// No clamping happens here.
std::array<std::vector<double>, 3> revde_mutate(std::span<const double> wi, std::span<const double> wj,
                                               std::span<const double> wk, double scaling);

// Inverse of revde_mutate: recovers (wi, wj, wk) from (v1, v2, v3).
std::array<std::vector<double>, 3> revde_unmutate(std::span<const double> v1, std::span<const double> v2,
                                                 std::span<const double> v3, double scaling);

// Takes each gene from the mutant with probability CR (independent Bernoulli
// mask, no forced gene), otherwise from the parent; the result is clamped to
// the box.
std::vector<double> uniform_crossover(std::span<const double> parent, std::span<const double> mutant,
                                      double crossover, RngStream& rng, const SearchBox& box);

struct Candidate {
    std::vector<double> genome;
    double fitness = 0.0;
};

// Highest-fitness mu members; ties keep pool order (lower index first).
std::vector<Candidate> select_top(std::vector<Candidate> pool, std::size_t mu);

using Objective = std::function<double(std::span<const double>)>;

struct RevdeResult {
    Genome best;
    double best_fitness = 0.0;
    std::vector<EvaluationRecord> history;
    std::size_t iterations_run = 0;
};

// Runs the full schedule: iteration one evaluates mu uniform samples from the
// box; each later iteration draws random triplets of distinct members from
// the top lambda, produces N_new candidates (mutate, then crossover against
// the triplet member that seeded each mutant) and keeps the best mu of the
// old population and the new candidates. A non-finite fitness is recorded
// as 0 and flagged.
RevdeResult run_revde(const Objective& objective, std::size_t dimension, const RevdeConfig& config,
                      RngStream& rng, const RecordLabel& label = {});

} // namespace morphlearn

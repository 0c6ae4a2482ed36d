#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace morphlearn {

// splitmix64 finalizer; used to derive independent stream keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Stable 64-bit hash of a string (FNV-1a followed by mix64), so that stream
// keys built from robot names do not depend on std::hash.
std::uint64_t hash_string(std::string_view s) noexcept;

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniform and Gaussian draws are derived
// from raw engine output here rather than through <random> distributions,
// whose algorithms are implementation-defined.
//
// Gaussian draws use the Box-Muller transform (both outputs consumed in
// order), so a given seed yields the same normals on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0);

    // Child stream keyed by `key`; independent of how many draws were taken
    // from this stream.
    RngStream split(std::uint64_t key) const;

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();
    double normal(double mean, double stddev);
    bool bernoulli(double p);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Stream keyed by (master seed, robot, framework, repetition).
RngStream keyed_stream(std::uint64_t master_seed, std::string_view robot, std::string_view framework,
                       std::uint64_t repetition);

} // namespace morphlearn

#include "morphlearn/rng.hpp"

#include <cmath>
#include <numbers>

namespace morphlearn {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RngStream RngStream::split(std::uint64_t key) const
{
    return RngStream(mix64(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n)
{
    if (n <= 1)
        return 0;
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return r % n;
}

double RngStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double RngStream::normal(double mean, double stddev) { return mean + stddev * normal(); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

RngStream keyed_stream(std::uint64_t master_seed, std::string_view robot, std::string_view framework,
                       std::uint64_t repetition)
{
    std::uint64_t key = mix64(master_seed);
    key = mix64(key ^ hash_string(robot));
    key = mix64(key ^ hash_string(framework));
    key = mix64(key ^ mix64(repetition));
    return RngStream(key);
}

} // namespace morphlearn

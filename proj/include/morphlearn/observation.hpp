#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace morphlearn {

inline constexpr std::size_t kHingeFeatures = 3;
inline constexpr std::size_t kOrientationFeatures = 4;

constexpr std::size_t observation_size(std::size_t hinges) noexcept
{
    return kHingeFeatures * hinges + kOrientationFeatures;
}

// Observation vector: for each hinge (angle, target, angular velocity), all
// normalized to roughly [-1, 1], followed by the body orientation quaternion
// (w, x, y, z).
struct Observation {
    std::vector<double> values;

    std::size_t hinge_count() const noexcept { return (values.size() - kOrientationFeatures) / kHingeFeatures; }
    std::span<const double> hinge_block() const noexcept
    {
        return std::span<const double>(values).first(values.size() - kOrientationFeatures);
    }
    std::span<const double> orientation() const noexcept
    {
        return std::span<const double>(values).last(kOrientationFeatures);
    }
};

// Anything that maps observations to hinge targets in [-1, 1].
class Policy {
public:
    virtual ~Policy() = default;
    // Called at the start of every episode.
    virtual void reset() {}
    virtual void act(const Observation& obs, std::span<double> targets) = 0;
};

} // namespace morphlearn

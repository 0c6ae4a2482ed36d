#pragma once

#include "morphlearn/morphology.hpp"
#include "morphlearn/observation.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include <json.hpp>

namespace morphlearn {

struct EnvConfig {
    double control_dt = 0.05;                    // s
    double horizon = 30.0;                       // s
    double hinge_range = std::numbers::pi / 3.0; // rad, deflection at |a| = 1
    double max_speed = 4.0;                      // rad/s
    double thrust_gain = 0.6;                    // cm per rad of swept deflection
    double module_length = 10.0;                 // cm; forwarded to external simulators
    // Thrust multiplier for strokes that move a hinge towards negative
    // angles. 1 makes the thrust an exact time derivative, so periodic
    // motion nets zero displacement; values below 1 make the positive stroke
    // the power stroke.
    double recovery_ratio = 0.5;

    std::size_t steps() const;
    // Normalized actuator speed limit (max_speed / hinge_range), per second.
    double normalized_speed() const noexcept { return max_speed / hinge_range; }
    void validate() const;
};

nlohmann::json to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const nlohmann::json& doc);

struct StepResult {
    Observation observation;
    std::array<double, 2> displacement{0.0, 0.0}; // cm moved during this step
    bool done = false;
};

// Common contract for the built-in surrogate and external simulators.
class Environment {
public:
    virtual ~Environment() = default;
    virtual Observation reset(std::uint64_t seed) = 0;
    virtual StepResult step(std::span<const double> targets) = 0;
    virtual std::size_t hinge_count() const = 0;
    virtual const EnvConfig& config() const = 0;
};

using EnvironmentFactory = std::function<std::unique_ptr<Environment>(const MorphologyTree&)>;

struct SimState {
    std::array<double, 2> position{0.0, 0.0}; // cm
    std::vector<double> angle;                // normalized, in [-1, 1]
    std::vector<double> velocity;             // normalized units per second
    std::vector<double> target;               // last commanded target
    std::size_t elapsed = 0;
};

// Reduced-order resistive-thrust locomotion model. Hinge i pushes the body
// along its outward axis u_i; over one control step, with the hinge moving at
// constant rate from a0 to a1, the body moves
//   kappa * s * (sin(theta a1) - sin(theta a0)) * u_i,
// the exact integral of kappa * da/dt * theta * cos(theta a) u_i, where s is 1
// for strokes towards positive angles and recovery_ratio otherwise. The body
// heading is fixed, so the orientation quaternion is always identity.
class SurrogateEnvironment final : public Environment {
public:
    SurrogateEnvironment(const MorphologyTree& tree, EnvConfig config);

    Observation reset(std::uint64_t seed) override;
    StepResult step(std::span<const double> targets) override;
    std::size_t hinge_count() const override { return axes_.size(); }
    const EnvConfig& config() const override { return config_; }

    const std::vector<std::array<double, 2>>& axes() const noexcept { return axes_; }
    const SimState& state() const noexcept { return state_; }

private:
    Observation observe() const;

    EnvConfig config_;
    std::vector<std::array<double, 2>> axes_;
    SimState state_;
    std::size_t total_steps_;
};

// Outward unit axis of each hinge (hinge order) from the grid layout.
std::vector<std::array<double, 2>> hinge_axes(const MorphologyTree& tree);

EnvironmentFactory surrogate_factory(EnvConfig config);

struct EpisodeResult {
    double fitness = 0.0; // cm/s
    std::array<double, 2> displacement{0.0, 0.0};
    std::size_t steps = 0;
};

// Runs one full episode. Fitness is the straight-line distance between start
// and end positions divided by the horizon.
EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed = 0);
double evaluate_fitness(Environment& env, Policy& policy, std::uint64_t seed = 0);
double evaluate_fitness(const MorphologyTree& tree, Policy& policy, const EnvConfig& config);

} // namespace morphlearn

#include "morphlearn/environment.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace morphlearn {

std::size_t EnvConfig::steps() const
{
    return static_cast<std::size_t>(std::llround(horizon / control_dt));
}

void EnvConfig::validate() const
{
    if (!(control_dt > 0.0))
        throw ConfigError("control_dt must be positive");
    if (!(horizon > 0.0))
        throw ConfigError("horizon must be positive");
    const double ratio = horizon / control_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        throw ConfigError("horizon must be an integral number of control steps");
    if (!(hinge_range > 0.0 && hinge_range <= std::numbers::pi / 2.0))
        throw ConfigError("hinge_range must lie in (0, pi/2]");
    if (!(max_speed > 0.0))
        throw ConfigError("max_speed must be positive");
    if (!(thrust_gain >= 0.0) || !(module_length > 0.0))
        throw ConfigError("thrust_gain must be non-negative and module_length positive");
    if (!(recovery_ratio >= 0.0 && recovery_ratio <= 1.0))
        throw ConfigError("recovery_ratio must lie in [0, 1]");
}

nlohmann::json to_json(const EnvConfig& c)
{
    return nlohmann::json{{"control_dt", c.control_dt},       {"horizon", c.horizon},
                          {"hinge_range", c.hinge_range},     {"max_speed", c.max_speed},
                          {"thrust_gain", c.thrust_gain},     {"module_length", c.module_length},
                          {"recovery_ratio", c.recovery_ratio}};
}

EnvConfig env_config_from_json(const nlohmann::json& doc)
{
    EnvConfig c;
    c.control_dt = doc.value("control_dt", c.control_dt);
    c.horizon = doc.value("horizon", c.horizon);
    c.hinge_range = doc.value("hinge_range", c.hinge_range);
    c.max_speed = doc.value("max_speed", c.max_speed);
    c.thrust_gain = doc.value("thrust_gain", c.thrust_gain);
    c.module_length = doc.value("module_length", c.module_length);
    c.recovery_ratio = doc.value("recovery_ratio", c.recovery_ratio);
    c.validate();
    return c;
}

std::vector<std::array<double, 2>> hinge_axes(const MorphologyTree& tree)
{
    static constexpr std::array<std::array<double, 2>, 4> unit{{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};
    const auto headings = module_headings(tree);
    std::vector<std::array<double, 2>> axes;
    for (int m : enumerate_hinges(tree))
        axes.push_back(unit[static_cast<std::size_t>(headings[static_cast<std::size_t>(m)])]);
    return axes;
}

SurrogateEnvironment::SurrogateEnvironment(const MorphologyTree& tree, EnvConfig config)
    : config_(config), axes_(hinge_axes(tree))
{
    config_.validate();
    if (axes_.empty())
        throw MorphologyError("robot '" + tree.name() + "' has no active hinges");
    total_steps_ = config_.steps();
    reset(0);
}

Observation SurrogateEnvironment::reset(std::uint64_t)
{
    const std::size_t n = axes_.size();
    state_ = SimState{};
    state_.angle.assign(n, 0.0);
    state_.velocity.assign(n, 0.0);
    state_.target.assign(n, 0.0);
    return observe();
}

Observation SurrogateEnvironment::observe() const
{
    const std::size_t n = axes_.size();
    const double v_norm = config_.normalized_speed();
    Observation obs;
    obs.values.reserve(observation_size(n));
    for (std::size_t i = 0; i < n; ++i) {
        obs.values.push_back(state_.angle[i]);
        obs.values.push_back(state_.target[i]);
        obs.values.push_back(state_.velocity[i] / v_norm);
    }
    obs.values.insert(obs.values.end(), {1.0, 0.0, 0.0, 0.0});
    return obs;
}

StepResult SurrogateEnvironment::step(std::span<const double> targets)
{
    const std::size_t n = axes_.size();
    if (targets.size() != n)
        throw DimensionError("step: expected " + std::to_string(n) + " targets, got "
                             + std::to_string(targets.size()));
    if (state_.elapsed >= total_steps_)
        throw ConfigError("step called after the episode finished");
    for (double t : targets)
        if (!std::isfinite(t))
            throw NumericError("step: non-finite hinge target");

    const double dt = config_.control_dt;
    const double max_delta = config_.normalized_speed() * dt;
    const double theta = config_.hinge_range;

    StepResult result;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = std::clamp(targets[i], -1.0, 1.0);
        const double a0 = state_.angle[i];
        const double a1 = std::clamp(a0 + std::clamp(target - a0, -max_delta, max_delta), -1.0, 1.0);
        state_.target[i] = target;
        state_.angle[i] = a1;
        state_.velocity[i] = (a1 - a0) / dt;

        const double stroke = a1 >= a0 ? 1.0 : config_.recovery_ratio;
        const double swept = config_.thrust_gain * stroke * (std::sin(theta * a1) - std::sin(theta * a0));
        result.displacement[0] += axes_[i][0] * swept;
        result.displacement[1] += axes_[i][1] * swept;
    }
    state_.position[0] += result.displacement[0];
    state_.position[1] += result.displacement[1];
    ++state_.elapsed;

    result.observation = observe();
    result.done = state_.elapsed == total_steps_;
    return result;
}

EnvironmentFactory surrogate_factory(EnvConfig config)
{
    return [config](const MorphologyTree& tree) -> std::unique_ptr<Environment> {
        return std::make_unique<SurrogateEnvironment>(tree, config);
    };
}

EpisodeResult run_episode(Environment& env, Policy& policy, std::uint64_t seed)
{
    Observation obs = env.reset(seed);
    policy.reset();
    std::vector<double> targets(env.hinge_count());
    EpisodeResult res;
    for (;;) {
        policy.act(obs, targets);
        StepResult s = env.step(targets);
        res.displacement[0] += s.displacement[0];
        res.displacement[1] += s.displacement[1];
        ++res.steps;
        obs = std::move(s.observation);
        if (s.done)
            break;
    }
    res.fitness = std::hypot(res.displacement[0], res.displacement[1]) / env.config().horizon;
    return res;
}

double evaluate_fitness(Environment& env, Policy& policy, std::uint64_t seed)
{
    return run_episode(env, policy, seed).fitness;
}

double evaluate_fitness(const MorphologyTree& tree, Policy& policy, const EnvConfig& config)
{
    SurrogateEnvironment env(tree, config);
    return evaluate_fitness(env, policy);
}

} // namespace morphlearn

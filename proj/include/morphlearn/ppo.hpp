#pragma once

#include "morphlearn/autodiff.hpp"
#include "morphlearn/environment.hpp"
#include "morphlearn/nn.hpp"
#include "morphlearn/records.hpp"
#include "morphlearn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace morphlearn {

struct PpoConfig {
    double gamma = 0.2;          // discount, as listed in the hyperparameter table
    double clip = 0.2;           // epsilon
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double gae_lambda = 0.95;
    std::size_t episodes = 100;
    std::size_t agents = 10;
    std::size_t steps_per_rollout = 150; // GAE segment length
    std::size_t epochs = 4;
    std::size_t minibatch = 256;
    double learning_rate = 3e-4;
    bool normalize_advantages = true;

    void validate() const;
    std::size_t evaluations() const noexcept { return episodes * agents; }
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t
// A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
// V_T is `bootstrap`; returns = A + V.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

inline constexpr double kRatioExponentLimit = 20.0;

// exp(new - old) with the exponent clamped to +-20; `clamped` reports whether
// the guard fired.
double ppo_ratio(double new_log_prob, double old_log_prob, bool* clamped = nullptr);

// min(r A, clip(r, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double clip) noexcept;

// Flattened training data: row t of every field describes one transition.
struct TrainingBatch {
    Tensor observations; // [T x obs]
    Tensor actions;      // [T x N], unclamped samples
    std::vector<double> old_log_probs;
    std::vector<double> advantages;
    std::vector<double> returns;

    std::size_t size() const noexcept { return old_log_probs.size(); }
    TrainingBatch subset(std::span<const std::size_t> rows) const;
};

struct PpoLossVars {
    ad::Var loss;
    ad::Var surrogate;
    ad::Var value_loss;
    ad::Var entropy;
};

// loss = -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e mean(entropy)
PpoLossVars ppo_loss(ad::Tape& tape, const ActorCriticVars& vars, const TrainingBatch& batch,
                     const PpoConfig& config);

// Gradient of the PPO loss with respect to the flattened parameters.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossAndGradient ppo_loss_and_gradient(const ActorCriticParams& params, const TrainingBatch& batch,
                                      const PpoConfig& config);

// Adaptive-moment optimizer state over a flat parameter vector.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void apply(std::span<double> params, std::span<const double> grad, double learning_rate);
};

// One training phase: `epochs` passes over shuffled minibatches.
ActorCriticParams ppo_update(const TrainingBatch& batch, const ActorCriticParams& params, const PpoConfig& config,
                             RngStream& rng, AdamState& adam);

// Per-step, per-agent transitions collected for one episode.
struct RolloutBuffer {
    std::size_t agents = 0;
    std::size_t steps = 0;
    std::size_t obs_dim = 0;
    std::size_t hinges = 0;
    std::vector<double> observations; // (agent, step) major
    std::vector<double> actions;
    std::vector<double> log_probs; // under the acting policy, recorded at collection time
    std::vector<double> values;
    std::vector<double> rewards;   // cm of distance from the start gained this step
    std::vector<std::uint8_t> dones;
    // Value estimate of the state after each transition; used to bootstrap
    // at segment cuts.
    std::vector<double> next_values;

    RolloutBuffer(std::size_t agents, std::size_t steps, std::size_t obs_dim, std::size_t hinges);
    std::size_t index(std::size_t agent, std::size_t step) const noexcept { return agent * steps + step; }
};

// GAE per agent over consecutive segments of `steps_per_rollout` transitions,
// each bootstrapped from the value after its last transition unless that
// transition ended the episode; optionally normalizes advantages.
TrainingBatch build_training_batch(const RolloutBuffer& buffer, const PpoConfig& config);

struct PpoResult {
    ActorCriticParams best;
    double best_fitness = 0.0;
    ActorCriticParams final_params;
    std::vector<EvaluationRecord> history;
    std::size_t updates = 0;
    bool aborted = false;
    std::string error;
};

// Each episode, every agent plays one full-horizon evaluation with actions
// sampled from the current policy (one record per agent, agent-major); the
// collected buffer then drives one ppo_update.
PpoResult run_ppo(const EnvironmentFactory& factory, const MorphologyTree& tree, const PpoConfig& config,
                  RngStream& rng, const RecordLabel& label = {});

} // namespace morphlearn

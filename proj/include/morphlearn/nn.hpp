#pragma once

#include "morphlearn/autodiff.hpp"
#include "morphlearn/genome.hpp"
#include "morphlearn/morphology.hpp"
#include "morphlearn/observation.hpp"
#include "morphlearn/rng.hpp"
#include "morphlearn/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace morphlearn {

inline constexpr std::size_t kEncodingWidth = 32;

// y = W x + b with W stored [out x in] row-major.
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear zeros(std::size_t out, std::size_t in);
    std::size_t in_dim() const noexcept { return weight.cols(); }
    std::size_t out_dim() const noexcept { return weight.rows(); }
    std::size_t param_count() const noexcept { return weight.size() + bias.size(); }

    friend bool operator==(const Linear&, const Linear&) = default;
};

// Two single-observation encoders (hinge block -> 32, orientation -> 32), each
// linear + tanh, concatenated and fused by a third linear + tanh to 32.
struct ObservationEncoder {
    Linear hinge;
    Linear orientation;
    Linear fusion;

    static ObservationEncoder zeros(std::size_t hinges);
    std::size_t param_count() const noexcept
    {
        return hinge.param_count() + orientation.param_count() + fusion.param_count();
    }

    friend bool operator==(const ObservationEncoder&, const ObservationEncoder&) = default;
};

// Deterministic actor: encoder followed by a linear + tanh head per hinge.
struct AnnParams {
    ObservationEncoder encoder;
    Linear actor;

    static AnnParams zeros(std::size_t hinges);
    std::size_t hinge_count() const noexcept { return actor.out_dim(); }
    std::size_t param_count() const noexcept { return encoder.param_count() + actor.param_count(); }

    friend bool operator==(const AnnParams&, const AnnParams&) = default;
};

// Gaussian actor-critic sharing one encoder. The log standard deviation is a
// learned, observation-independent vector.
struct ActorCriticParams {
    ObservationEncoder encoder;
    Linear mean;
    Tensor log_std;
    Linear critic;

    static ActorCriticParams zeros(std::size_t hinges);
    std::size_t hinge_count() const noexcept { return mean.out_dim(); }
    std::size_t param_count() const noexcept
    {
        return encoder.param_count() + mean.param_count() + log_std.size() + critic.param_count();
    }

    friend bool operator==(const ActorCriticParams&, const ActorCriticParams&) = default;
};

// Fan-in uniform initialisation U(-1/sqrt(in), 1/sqrt(in)) for every linear
// map; log_std starts at zero.
ActorCriticParams init_actor_critic(std::size_t hinges, RngStream& rng);

std::vector<double> ann_forward(const AnnParams& params, std::span<const double> obs);

struct PolicyOutput {
    std::vector<double> mean;
    std::vector<double> std;
    double value = 0.0;
};

PolicyOutput actor_critic_forward(const ActorCriticParams& params, std::span<const double> obs);

struct GaussianStats {
    double log_prob = 0.0;
    double entropy = 0.0;
};

// Diagonal Gaussian log density of `action` and the distribution entropy,
// both summed over hinges.
GaussianStats log_prob_and_entropy(std::span<const double> mean, std::span<const double> std,
                                   std::span<const double> action);

// Parameter counts exactly as the closed-form formulas state them:
//   ANN = 32(3N+4+1) + 32(64+1) + N(32+1)
//   DRL = (N(32+1) + 2N(N+1)) + (32+1) + (32(3N+4+1) + 32(64+1))
std::size_t ann_param_count(std::size_t hinges) noexcept;
std::size_t drl_param_count(std::size_t hinges) noexcept;
std::size_t ann_param_count(const MorphologyTree& tree);
std::size_t drl_param_count(const MorphologyTree& tree);

// Number of values in the instantiated networks. The formula counts fold the
// two encoder biases into a single term, so these are larger.
std::size_t ann_structural_param_count(std::size_t hinges);
std::size_t drl_structural_param_count(std::size_t hinges);

// Genome ordering: hinge encoder, orientation encoder, fusion, actor; each as
// weights row-major then bias.
Genome genome_encode(const AnnParams& params, std::string layout = "ann");
AnnParams genome_decode(std::size_t hinges, const Genome& genome);
AnnParams genome_decode(const MorphologyTree& tree, const Genome& genome);

// Flat vector of all actor-critic values: encoder (as above), mean head,
// log_std, critic head.
std::vector<double> flatten(const ActorCriticParams& params);
ActorCriticParams unflatten_actor_critic(std::size_t hinges, std::span<const double> values);

// Actor-critic parameters registered as tape leaves, in flatten() order.
struct ActorCriticVars {
    ad::Var hinge_w, hinge_b, orient_w, orient_b, fusion_w, fusion_b;
    ad::Var mean_w, mean_b, log_std, critic_w, critic_b;
};

ActorCriticVars register_leaves(ad::Tape& tape, const ActorCriticParams& params);

// Reassembles per-leaf gradients (tape leaf order) into an ActorCriticParams
// shaped gradient and flattens it.
std::vector<double> flatten_gradient(const std::vector<Tensor>& leaf_grads);

struct BatchPolicyVars {
    ad::Var mean;    // [batch x N]
    ad::Var log_std; // [N]
    ad::Var value;   // [batch]
};

// Batched forward pass on the tape. `obs` rows are observation vectors.
BatchPolicyVars actor_critic_forward(ad::Tape& tape, const ActorCriticVars& vars, const Tensor& obs);

// Policy adapters for rollouts.
class AnnPolicy final : public Policy {
public:
    explicit AnnPolicy(AnnParams params) : params_(std::move(params)) {}
    void act(const Observation& obs, std::span<double> targets) override;

private:
    AnnParams params_;
};

// Acts with the Gaussian mean, clamped to [-1, 1].
class MeanPolicy final : public Policy {
public:
    explicit MeanPolicy(ActorCriticParams params) : params_(std::move(params)) {}
    void act(const Observation& obs, std::span<double> targets) override;

private:
    ActorCriticParams params_;
};

// Flat parameter checkpoint: a JSON object with "morphology", "controller",
// "count" and "values".
struct Checkpoint {
    std::string morphology;
    std::string controller;
    std::vector<double> values;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace morphlearn

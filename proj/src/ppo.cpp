#include "morphlearn/ppo.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace morphlearn {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

Tensor column(std::span<const double> values)
{
    return Tensor::vector(std::vector<double>(values.begin(), values.end()));
}

} // namespace

void PpoConfig::validate() const
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("PPO gamma must lie in (0, 1]");
    if (!(clip > 0.0))
        throw ConfigError("PPO clip range must be positive");
    if (entropy_coef < 0.0 || value_coef < 0.0)
        throw ConfigError("PPO loss coefficients must be non-negative");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
        throw ConfigError("GAE lambda must lie in [0, 1]");
    if (episodes == 0 || agents == 0 || steps_per_rollout == 0 || epochs == 0 || minibatch == 0)
        throw ConfigError("PPO counts must be positive");
    if (!(learning_rate >= 0.0))
        throw ConfigError("PPO learning rate must be non-negative");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda)
{
    const std::size_t n = rewards.size();
    if (values.size() != n || dones.size() != n)
        throw DimensionError("compute_gae: rewards, values and dones differ in length");
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double next_value = bootstrap;
    double next_adv = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double live = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_value * live - values[t];
        const double adv = delta + gamma * lambda * live * next_adv;
        out.advantages[t] = adv;
        out.returns[t] = adv + values[t];
        next_value = values[t];
        next_adv = adv;
    }
    return out;
}

double ppo_ratio(double new_log_prob, double old_log_prob, bool* clamped)
{
    if (!std::isfinite(new_log_prob) || !std::isfinite(old_log_prob))
        throw NumericError("ppo_ratio: non-finite log-probability");
    const double diff = new_log_prob - old_log_prob;
    const double guarded = std::clamp(diff, -kRatioExponentLimit, kRatioExponentLimit);
    if (clamped)
        *clamped = guarded != diff;
    return std::exp(guarded);
}

double clipped_surrogate(double ratio, double advantage, double clip) noexcept
{
    const double unclipped = ratio * advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
    return std::min(unclipped, clipped);
}

TrainingBatch TrainingBatch::subset(std::span<const std::size_t> rows) const
{
    const std::size_t obs_dim = observations.cols();
    const std::size_t act_dim = actions.cols();
    TrainingBatch b;
    b.observations = Tensor::matrix(rows.size(), obs_dim);
    b.actions = Tensor::matrix(rows.size(), act_dim);
    b.old_log_probs.reserve(rows.size());
    b.advantages.reserve(rows.size());
    b.returns.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t src = rows[r];
        std::copy_n(observations.values().begin() + static_cast<std::ptrdiff_t>(src * obs_dim), obs_dim,
                    b.observations.values().begin() + static_cast<std::ptrdiff_t>(r * obs_dim));
        std::copy_n(actions.values().begin() + static_cast<std::ptrdiff_t>(src * act_dim), act_dim,
                    b.actions.values().begin() + static_cast<std::ptrdiff_t>(r * act_dim));
        b.old_log_probs.push_back(old_log_probs[src]);
        b.advantages.push_back(advantages[src]);
        b.returns.push_back(returns[src]);
    }
    return b;
}

PpoLossVars ppo_loss(ad::Tape& tape, const ActorCriticVars& vars, const TrainingBatch& batch, const PpoConfig& config)
{
    const std::size_t rows = batch.size();
    if (rows == 0)
        throw DimensionError("ppo_loss: empty batch");
    if (batch.observations.rows() != rows || batch.actions.rows() != rows || batch.advantages.size() != rows
        || batch.returns.size() != rows)
        throw DimensionError("ppo_loss: batch fields differ in length");

    const char* term = "policy forward pass";
    try {
        const BatchPolicyVars pol = actor_critic_forward(tape, vars, batch.observations);
        const std::size_t hinges = tape.value(pol.log_std).size();

        term = "log-probability";
        const ad::Var log_std = tape.broadcast_rows(pol.log_std, rows);
        const ad::Var actions = tape.constant(batch.actions);
        const ad::Var z = tape.mul(tape.sub(actions, pol.mean), tape.exp(tape.scale(log_std, -1.0)));
        const ad::Var per_hinge = tape.add_scalar(tape.sub(tape.scale(tape.square(z), -0.5), log_std), -0.5 * kLogTwoPi);
        const ad::Var log_prob = tape.row_sum(per_hinge);

        term = "probability ratio";
        const ad::Var log_ratio =
            tape.clamp(tape.sub(log_prob, tape.constant(column(batch.old_log_probs))), -kRatioExponentLimit,
                       kRatioExponentLimit);
        const ad::Var ratio = tape.exp(log_ratio);

        term = "clipped surrogate";
        const ad::Var adv = tape.constant(column(batch.advantages));
        const ad::Var surr1 = tape.mul(ratio, adv);
        const ad::Var surr2 = tape.mul(tape.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv);
        const ad::Var surrogate = tape.mean(tape.minimum(surr1, surr2));

        term = "value loss";
        const ad::Var value_loss = tape.mean(tape.square(tape.sub(pol.value, tape.constant(column(batch.returns)))));

        term = "entropy";
        // The standard deviation does not depend on the observation, so the
        // batch-mean entropy equals the entropy of a single distribution.
        const ad::Var entropy =
            tape.add_scalar(tape.sum(pol.log_std), static_cast<double>(hinges) * (0.5 + 0.5 * kLogTwoPi));

        term = "total loss";
        const ad::Var loss = tape.sub(tape.add(tape.scale(surrogate, -1.0), tape.scale(value_loss, config.value_coef)),
                                      tape.scale(entropy, config.entropy_coef));
        return PpoLossVars{loss, surrogate, value_loss, entropy};
    } catch (const NumericError& e) {
        throw NumericError(std::string("PPO loss term '") + term + "': " + e.what());
    }
}

LossAndGradient ppo_loss_and_gradient(const ActorCriticParams& params, const TrainingBatch& batch,
                                      const PpoConfig& config)
{
    ad::Tape tape;
    const ActorCriticVars vars = register_leaves(tape, params);
    const PpoLossVars l = ppo_loss(tape, vars, batch, config);
    LossAndGradient out;
    out.loss = tape.value(l.loss)[0];
    out.gradient = flatten_gradient(tape.backward(l.loss));
    return out;
}

void AdamState::apply(std::span<double> params, std::span<const double> grad, double learning_rate)
{
    if (params.size() != grad.size())
        throw DimensionError("Adam: parameter and gradient sizes differ");
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        step = 0;
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

ActorCriticParams ppo_update(const TrainingBatch& batch, const ActorCriticParams& params, const PpoConfig& config,
                             RngStream& rng, AdamState& adam)
{
    config.validate();
    const std::size_t hinges = params.hinge_count();
    std::vector<double> flat = flatten(params);
    ActorCriticParams current = params;

    std::vector<std::size_t> order(batch.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
        for (std::size_t start = 0; start < order.size(); start += config.minibatch) {
            const std::size_t len = std::min(config.minibatch, order.size() - start);
            const TrainingBatch mb = batch.subset(std::span<const std::size_t>(order).subspan(start, len));
            const LossAndGradient lg = ppo_loss_and_gradient(current, mb, config);
            adam.apply(flat, lg.gradient, config.learning_rate);
            current = unflatten_actor_critic(hinges, flat);
        }
    }
    return current;
}

RolloutBuffer::RolloutBuffer(std::size_t agents_, std::size_t steps_, std::size_t obs_dim_, std::size_t hinges_)
    : agents(agents_), steps(steps_), obs_dim(obs_dim_), hinges(hinges_),
      observations(agents_ * steps_ * obs_dim_), actions(agents_ * steps_ * hinges_),
      log_probs(agents_ * steps_), values(agents_ * steps_), rewards(agents_ * steps_), dones(agents_ * steps_),
      next_values(agents_ * steps_)
{
}

TrainingBatch build_training_batch(const RolloutBuffer& buf, const PpoConfig& config)
{
    const std::size_t total = buf.agents * buf.steps;
    TrainingBatch batch;
    batch.observations = Tensor::matrix(total, buf.obs_dim, buf.observations);
    batch.actions = Tensor::matrix(total, buf.hinges, buf.actions);
    batch.old_log_probs = buf.log_probs;
    batch.advantages.resize(total);
    batch.returns.resize(total);

    for (std::size_t a = 0; a < buf.agents; ++a) {
        for (std::size_t start = 0; start < buf.steps; start += config.steps_per_rollout) {
            const std::size_t len = std::min(config.steps_per_rollout, buf.steps - start);
            const std::size_t first = buf.index(a, start);
            const std::size_t last = first + len - 1;
            const double bootstrap = buf.dones[last] ? 0.0 : buf.next_values[last];
            const GaeResult g = compute_gae(std::span<const double>(buf.rewards).subspan(first, len),
                                            std::span<const double>(buf.values).subspan(first, len),
                                            std::span<const std::uint8_t>(buf.dones).subspan(first, len), bootstrap,
                                            config.gamma, config.gae_lambda);
            std::copy(g.advantages.begin(), g.advantages.end(), batch.advantages.begin() + static_cast<std::ptrdiff_t>(first));
            std::copy(g.returns.begin(), g.returns.end(), batch.returns.begin() + static_cast<std::ptrdiff_t>(first));
        }
    }

    if (config.normalize_advantages && total > 1) {
        const double mu = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / static_cast<double>(total);
        double var = 0.0;
        for (double x : batch.advantages)
            var += (x - mu) * (x - mu);
        const double sd = std::sqrt(var / static_cast<double>(total));
        for (double& x : batch.advantages)
            x = (x - mu) / (sd + 1e-8);
    }
    return batch;
}

PpoResult run_ppo(const EnvironmentFactory& factory, const MorphologyTree& tree, const PpoConfig& config,
                  RngStream& rng, const RecordLabel& label)
{
    config.validate();
    PpoResult result;
    result.history.reserve(config.evaluations());

    std::vector<std::unique_ptr<Environment>> envs;
    try {
        for (std::size_t a = 0; a < config.agents; ++a)
            envs.push_back(factory(tree));
    } catch (const std::exception& e) {
        result.aborted = true;
        result.error = e.what();
        return result;
    }

    const std::size_t hinges = envs.front()->hinge_count();
    const std::size_t obs_dim = observation_size(hinges);
    const std::size_t steps = envs.front()->config().steps();
    const double horizon = envs.front()->config().horizon;

    RngStream init_rng = rng.split(0x1417);
    ActorCriticParams params = init_actor_critic(hinges, init_rng);
    result.best = params;
    result.best_fitness = -1.0;
    AdamState adam;
    std::vector<double> action(hinges), targets(hinges);

    for (std::size_t episode = 0; episode < config.episodes; ++episode) {
        RolloutBuffer buf(config.agents, steps, obs_dim, hinges);
        try {
            for (std::size_t a = 0; a < config.agents; ++a) {
                RngStream act_rng = rng.split((episode + 1) * 0x10000 + a);
                Environment& env = *envs[a];
                Observation obs = env.reset(episode * config.agents + a);
                double px = 0.0, py = 0.0;
                for (std::size_t t = 0; t < steps; ++t) {
                    const std::size_t idx = buf.index(a, t);
                    const PolicyOutput out = actor_critic_forward(params, obs.values);
                    for (std::size_t h = 0; h < hinges; ++h) {
                        action[h] = out.mean[h] + out.std[h] * act_rng.normal();
                        targets[h] = std::clamp(action[h], -1.0, 1.0);
                    }
                    const GaussianStats gs = log_prob_and_entropy(out.mean, out.std, action);
                    std::copy(obs.values.begin(), obs.values.end(),
                              buf.observations.begin() + static_cast<std::ptrdiff_t>(idx * obs_dim));
                    std::copy(action.begin(), action.end(), buf.actions.begin() + static_cast<std::ptrdiff_t>(idx * hinges));
                    buf.log_probs[idx] = gs.log_prob;
                    buf.values[idx] = out.value;

                    StepResult s = env.step(targets);
                    const double before = std::hypot(px, py);
                    px += s.displacement[0];
                    py += s.displacement[1];
                    buf.rewards[idx] = std::hypot(px, py) - before;
                    const bool last = s.done || t + 1 == steps;
                    buf.dones[idx] = last ? 1 : 0;
                    obs = std::move(s.observation);
                    const bool cut = (t + 1) % config.steps_per_rollout == 0;
                    if (!last && cut)
                        buf.next_values[idx] = actor_critic_forward(params, obs.values).value;
                    if (last)
                        break;
                }
                const double fitness = std::hypot(px, py) / horizon;
                result.history.push_back(EvaluationRecord{label.framework, label.robot, label.repetition,
                                                          result.history.size() + 1, fitness, false});
                if (fitness > result.best_fitness) {
                    result.best_fitness = fitness;
                    result.best = params;
                }
            }
        } catch (const std::exception& e) {
            result.aborted = true;
            result.error = e.what();
            for (auto& r : result.history)
                r.flagged = true;
            result.final_params = params;
            return result;
        }

        RngStream update_rng = rng.split(0x7770000 + episode);
        params = ppo_update(build_training_batch(buf, config), params, config, update_rng, adam);
        ++result.updates;
    }
    result.final_params = params;
    return result;
}

} // namespace morphlearn

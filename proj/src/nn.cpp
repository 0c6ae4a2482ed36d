#include "morphlearn/nn.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace morphlearn {

Linear Linear::zeros(std::size_t out, std::size_t in)
{
    return Linear{Tensor::matrix(out, in), Tensor::vector(std::vector<double>(out, 0.0))};
}

ObservationEncoder ObservationEncoder::zeros(std::size_t hinges)
{
    return ObservationEncoder{Linear::zeros(kEncodingWidth, kHingeFeatures * hinges),
                              Linear::zeros(kEncodingWidth, kOrientationFeatures),
                              Linear::zeros(kEncodingWidth, 2 * kEncodingWidth)};
}

AnnParams AnnParams::zeros(std::size_t hinges)
{
    return AnnParams{ObservationEncoder::zeros(hinges), Linear::zeros(hinges, kEncodingWidth)};
}

ActorCriticParams ActorCriticParams::zeros(std::size_t hinges)
{
    return ActorCriticParams{ObservationEncoder::zeros(hinges), Linear::zeros(hinges, kEncodingWidth),
                             Tensor::vector(std::vector<double>(hinges, 0.0)),
                             Linear::zeros(1, kEncodingWidth)};
}

namespace {

void init_linear(Linear& layer, RngStream& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
    for (double& w : layer.weight.values())
        w = rng.uniform(-bound, bound);
    for (double& b : layer.bias.values())
        b = rng.uniform(-bound, bound);
}

// out = tanh(W x + b) or the affine map alone.
void apply_linear(const Linear& layer, const double* x, double* out, bool squash)
{
    const std::size_t in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();
    const double* w = layer.weight.values().data();
    for (std::size_t o = 0; o < n_out; ++o) {
        double acc = layer.bias[o];
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i)
            acc += row[i] * x[i];
        out[o] = squash ? std::tanh(acc) : acc;
    }
}

std::array<double, kEncodingWidth> encode(const ObservationEncoder& enc, std::span<const double> obs)
{
    const std::size_t hinge_in = enc.hinge.in_dim();
    if (obs.size() != hinge_in + kOrientationFeatures)
        throw DimensionError("observation length " + std::to_string(obs.size()) + " does not match encoder input "
                             + std::to_string(hinge_in + kOrientationFeatures));
    std::array<double, 2 * kEncodingWidth> joint{};
    apply_linear(enc.hinge, obs.data(), joint.data(), true);
    apply_linear(enc.orientation, obs.data() + hinge_in, joint.data() + kEncodingWidth, true);
    std::array<double, kEncodingWidth> fused{};
    apply_linear(enc.fusion, joint.data(), fused.data(), true);
    return fused;
}

void append(std::vector<double>& out, const Tensor& t)
{
    out.insert(out.end(), t.values().begin(), t.values().end());
}

void append(std::vector<double>& out, const Linear& l)
{
    append(out, l.weight);
    append(out, l.bias);
}

void append(std::vector<double>& out, const ObservationEncoder& e)
{
    append(out, e.hinge);
    append(out, e.orientation);
    append(out, e.fusion);
}

class Reader {
public:
    explicit Reader(std::span<const double> values) : values_(values) {}

    void fill(Tensor& t)
    {
        if (pos_ + t.size() > values_.size())
            throw DimensionError("flat parameter vector too short");
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(pos_), t.size(), t.values().begin());
        pos_ += t.size();
    }
    void fill(Linear& l)
    {
        fill(l.weight);
        fill(l.bias);
    }
    void fill(ObservationEncoder& e)
    {
        fill(e.hinge);
        fill(e.orientation);
        fill(e.fusion);
    }
    void finish() const
    {
        if (pos_ != values_.size())
            throw DimensionError("flat parameter vector too long: " + std::to_string(values_.size()) + " values, "
                                 + std::to_string(pos_) + " used");
    }

private:
    std::span<const double> values_;
    std::size_t pos_ = 0;
};

} // namespace

ActorCriticParams init_actor_critic(std::size_t hinges, RngStream& rng)
{
    ActorCriticParams p = ActorCriticParams::zeros(hinges);
    init_linear(p.encoder.hinge, rng);
    init_linear(p.encoder.orientation, rng);
    init_linear(p.encoder.fusion, rng);
    init_linear(p.mean, rng);
    init_linear(p.critic, rng);
    return p;
}

std::vector<double> ann_forward(const AnnParams& params, std::span<const double> obs)
{
    const auto code = encode(params.encoder, obs);
    std::vector<double> action(params.hinge_count());
    apply_linear(params.actor, code.data(), action.data(), true);
    return action;
}

PolicyOutput actor_critic_forward(const ActorCriticParams& params, std::span<const double> obs)
{
    const auto code = encode(params.encoder, obs);
    PolicyOutput out;
    out.mean.resize(params.hinge_count());
    apply_linear(params.mean, code.data(), out.mean.data(), false);
    out.std.resize(params.hinge_count());
    for (std::size_t i = 0; i < out.std.size(); ++i)
        out.std[i] = std::exp(params.log_std[i]);
    apply_linear(params.critic, code.data(), &out.value, false);
    return out;
}

GaussianStats log_prob_and_entropy(std::span<const double> mean, std::span<const double> std,
                                   std::span<const double> action)
{
    if (mean.size() != std.size() || mean.size() != action.size())
        throw DimensionError("log_prob_and_entropy: length mismatch");
    constexpr double log_two_pi = 1.8378770664093453; // ln(2 pi)
    GaussianStats s;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (!(std[i] > 0.0))
            throw NumericError("log_prob_and_entropy: standard deviation must be positive");
        const double z = (action[i] - mean[i]) / std[i];
        const double log_std = std::log(std[i]);
        s.log_prob += -0.5 * z * z - log_std - 0.5 * log_two_pi;
        s.entropy += 0.5 + 0.5 * log_two_pi + log_std;
    }
    return s;
}

std::size_t ann_param_count(std::size_t n) noexcept
{
    return 32 * (n * 3 + 4 + 1) + 32 * (64 + 1) + n * (32 + 1);
}

std::size_t drl_param_count(std::size_t n) noexcept
{
    return (n * (32 + 1) + 2 * n * (n + 1)) + (1 * 32 + 1) + (32 * (n * 3 + 4 + 1) + 32 * (64 + 1));
}

std::size_t ann_param_count(const MorphologyTree& tree) { return ann_param_count(tree.hinge_count()); }
std::size_t drl_param_count(const MorphologyTree& tree) { return drl_param_count(tree.hinge_count()); }

std::size_t ann_structural_param_count(std::size_t hinges)
{
    return AnnParams::zeros(hinges).param_count();
}

std::size_t drl_structural_param_count(std::size_t hinges)
{
    return ActorCriticParams::zeros(hinges).param_count();
}

Genome genome_encode(const AnnParams& params, std::string layout)
{
    Genome g;
    g.layout = std::move(layout);
    g.values.reserve(params.param_count());
    append(g.values, params.encoder);
    append(g.values, params.actor);
    return g;
}

AnnParams genome_decode(std::size_t hinges, const Genome& genome)
{
    AnnParams p = AnnParams::zeros(hinges);
    if (genome.size() != p.param_count())
        throw DimensionError("ANN genome needs " + std::to_string(p.param_count()) + " values, got "
                             + std::to_string(genome.size()));
    Reader r(genome.values);
    r.fill(p.encoder);
    r.fill(p.actor);
    r.finish();
    return p;
}

AnnParams genome_decode(const MorphologyTree& tree, const Genome& genome)
{
    return genome_decode(tree.hinge_count(), genome);
}

std::vector<double> flatten(const ActorCriticParams& params)
{
    std::vector<double> out;
    out.reserve(params.param_count());
    append(out, params.encoder);
    append(out, params.mean);
    append(out, params.log_std);
    append(out, params.critic);
    return out;
}

ActorCriticParams unflatten_actor_critic(std::size_t hinges, std::span<const double> values)
{
    ActorCriticParams p = ActorCriticParams::zeros(hinges);
    Reader r(values);
    r.fill(p.encoder);
    r.fill(p.mean);
    r.fill(p.log_std);
    r.fill(p.critic);
    r.finish();
    return p;
}

ActorCriticVars register_leaves(ad::Tape& tape, const ActorCriticParams& p)
{
    ActorCriticVars v;
    v.hinge_w = tape.leaf(p.encoder.hinge.weight);
    v.hinge_b = tape.leaf(p.encoder.hinge.bias);
    v.orient_w = tape.leaf(p.encoder.orientation.weight);
    v.orient_b = tape.leaf(p.encoder.orientation.bias);
    v.fusion_w = tape.leaf(p.encoder.fusion.weight);
    v.fusion_b = tape.leaf(p.encoder.fusion.bias);
    v.mean_w = tape.leaf(p.mean.weight);
    v.mean_b = tape.leaf(p.mean.bias);
    v.log_std = tape.leaf(p.log_std);
    v.critic_w = tape.leaf(p.critic.weight);
    v.critic_b = tape.leaf(p.critic.bias);
    return v;
}

std::vector<double> flatten_gradient(const std::vector<Tensor>& leaf_grads)
{
    std::vector<double> out;
    for (const Tensor& g : leaf_grads)
        append(out, g);
    return out;
}

BatchPolicyVars actor_critic_forward(ad::Tape& tape, const ActorCriticVars& v, const Tensor& obs)
{
    if (obs.rank() != 2)
        throw DimensionError("batched forward expects a [batch x obs] matrix");
    const std::size_t batch = obs.rows();
    const std::size_t width = obs.cols();
    const std::size_t hinge_in = tape.value(v.hinge_w).cols();
    if (width != hinge_in + kOrientationFeatures)
        throw DimensionError("observation width " + std::to_string(width) + " does not match encoder");

    Tensor hinge_block = Tensor::matrix(batch, hinge_in);
    Tensor orient_block = Tensor::matrix(batch, kOrientationFeatures);
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < hinge_in; ++c)
            hinge_block.at(r, c) = obs.at(r, c);
        for (std::size_t c = 0; c < kOrientationFeatures; ++c)
            orient_block.at(r, c) = obs.at(r, hinge_in + c);
    }
    const ad::Var h = tape.tanh(tape.linear(tape.constant(std::move(hinge_block)), v.hinge_w, v.hinge_b));
    const ad::Var o = tape.tanh(tape.linear(tape.constant(std::move(orient_block)), v.orient_w, v.orient_b));
    const ad::Var code = tape.tanh(tape.linear(tape.concat_cols(h, o), v.fusion_w, v.fusion_b));

    BatchPolicyVars out;
    out.mean = tape.linear(code, v.mean_w, v.mean_b);
    out.log_std = v.log_std;
    out.value = tape.reshape(tape.linear(code, v.critic_w, v.critic_b), {batch});
    return out;
}

void AnnPolicy::act(const Observation& obs, std::span<double> targets)
{
    const auto a = ann_forward(params_, obs.values);
    if (targets.size() != a.size())
        throw DimensionError("ANN policy: target buffer has wrong length");
    std::copy(a.begin(), a.end(), targets.begin());
}

void MeanPolicy::act(const Observation& obs, std::span<double> targets)
{
    const auto out = actor_critic_forward(params_, obs.values);
    if (targets.size() != out.mean.size())
        throw DimensionError("mean policy: target buffer has wrong length");
    for (std::size_t i = 0; i < targets.size(); ++i)
        targets[i] = std::clamp(out.mean[i], -1.0, 1.0);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path)
{
    nlohmann::json doc;
    doc["morphology"] = checkpoint.morphology;
    doc["controller"] = checkpoint.controller;
    doc["count"] = checkpoint.values.size();
    doc["values"] = checkpoint.values;
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write checkpoint " + path.string());
    out << doc.dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open checkpoint " + path.string());
    try {
        const auto doc = nlohmann::json::parse(in);
        Checkpoint c;
        c.morphology = doc.at("morphology").get<std::string>();
        c.controller = doc.at("controller").get<std::string>();
        c.values = doc.at("values").get<std::vector<double>>();
        if (doc.at("count").get<std::size_t>() != c.values.size())
            throw ConfigError("checkpoint count does not match the number of values");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace morphlearn

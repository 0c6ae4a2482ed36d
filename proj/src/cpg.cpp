#include "morphlearn/cpg.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace morphlearn {

std::size_t cpg_param_count(const MorphologyTree& tree)
{
    const NeighbourGraph g = neighbour_pairs(tree);
    return g.hinge_count + g.pairs.size();
}

CpgNetwork::CpgNetwork(NeighbourGraph graph, std::vector<double> internal, std::vector<double> coupling)
    : graph_(std::move(graph)), internal_(std::move(internal)), coupling_(std::move(coupling))
{
    if (internal_.size() != graph_.hinge_count || coupling_.size() != graph_.pairs.size())
        throw DimensionError("CPG weights do not match the neighbour graph");
}

double CpgNetwork::coupling(std::size_t from, std::size_t to) const
{
    for (std::size_t p = 0; p < graph_.pairs.size(); ++p) {
        const auto [i, j] = graph_.pairs[p];
        if (i == to && j == from)
            return coupling_[p];
        if (i == from && j == to)
            return -coupling_[p];
    }
    return 0.0;
}

void CpgNetwork::derivative(std::span<const double> state, std::span<double> out) const
{
    const std::size_t n = internal_.size();
    const double* x = state.data();
    const double* y = state.data() + n;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = internal_[i] * y[i];
        out[n + i] = -internal_[i] * x[i];
    }
    for (std::size_t p = 0; p < graph_.pairs.size(); ++p) {
        const auto [i, j] = graph_.pairs[p];
        const double c = coupling_[p];
        out[i] += c * x[j];
        out[j] -= c * x[i];
    }
}

CpgNetwork build_cpg(const MorphologyTree& tree, const Genome& genome)
{
    NeighbourGraph graph = neighbour_pairs(tree);
    const std::size_t n = graph.hinge_count;
    const std::size_t expected = n + graph.pairs.size();
    if (genome.size() != expected)
        throw DimensionError("CPG genome for '" + tree.name() + "' needs " + std::to_string(expected)
                             + " values, got " + std::to_string(genome.size()));
    std::vector<double> internal(genome.values.begin(), genome.values.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<double> coupling(genome.values.begin() + static_cast<std::ptrdiff_t>(n), genome.values.end());
    return CpgNetwork(std::move(graph), std::move(internal), std::move(coupling));
}

CpgState CpgState::initial(std::size_t hinges)
{
    const double v = std::sqrt(2.0) / 2.0;
    return CpgState{std::vector<double>(hinges, v), std::vector<double>(hinges, v)};
}

CpgState cpg_step(const CpgNetwork& net, const CpgState& state, double dt)
{
    const std::size_t n = net.hinge_count();
    if (state.x.size() != n || state.y.size() != n)
        throw DimensionError("CPG state does not match network");
    std::vector<double> packed(2 * n);
    std::copy(state.x.begin(), state.x.end(), packed.begin());
    std::copy(state.y.begin(), state.y.end(), packed.begin() + static_cast<std::ptrdiff_t>(n));
    Rk4Workspace ws;
    rk4_step([&net](std::span<const double> s, std::span<double> d) { net.derivative(s, d); },
             std::span<double>(packed), dt, ws);
    CpgState next{std::vector<double>(packed.begin(), packed.begin() + static_cast<std::ptrdiff_t>(n)),
                  std::vector<double>(packed.begin() + static_cast<std::ptrdiff_t>(n), packed.end())};
    return next;
}

std::vector<double> cpg_output(const CpgState& state)
{
    std::vector<double> out(state.x.size());
    std::transform(state.x.begin(), state.x.end(), out.begin(), [](double x) { return std::tanh(x); });
    return out;
}

CpgPolicy::CpgPolicy(CpgNetwork net, double control_dt, double internal_dt)
    : net_(std::move(net)), control_dt_(control_dt)
{
    if (!(control_dt > 0.0) || !(internal_dt > 0.0))
        throw ConfigError("CPG time steps must be positive");
    substeps_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(control_dt / internal_dt)));
    substep_dt_ = control_dt / static_cast<double>(substeps_);
    reset();
}

void CpgPolicy::reset()
{
    const std::size_t n = net_.hinge_count();
    state_.assign(2 * n, std::sqrt(2.0) / 2.0);
}

void CpgPolicy::act(const Observation&, std::span<double> targets)
{
    const std::size_t n = net_.hinge_count();
    if (targets.size() != n)
        throw DimensionError("CPG policy: target buffer has wrong length");
    for (std::size_t i = 0; i < n; ++i)
        targets[i] = std::tanh(state_[i]);
    auto f = [this](std::span<const double> s, std::span<double> d) { net_.derivative(s, d); };
    for (std::size_t k = 0; k < substeps_; ++k)
        rk4_step(f, std::span<double>(state_), substep_dt_, ws_);
}

} // namespace morphlearn

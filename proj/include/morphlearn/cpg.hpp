#pragma once

#include "morphlearn/genome.hpp"
#include "morphlearn/morphology.hpp"
#include "morphlearn/observation.hpp"
#include "morphlearn/rk4.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace morphlearn {

// Genome length for a CPG controller: one internal weight per hinge plus one
// coupling weight per neighbour pair.
std::size_t cpg_param_count(const MorphologyTree& tree);

// Coupled-oscillator network, one (x, y) oscillator per hinge:
//   dx_i/dt = w_i y_i + sum_{j in N(i)} c_{ji} x_j
//   dy_i/dt = -w_i x_i
// A pair (i, j) with i < j carries one coupling weight c: x_j feeds x_i with
// +c and x_i feeds x_j with -c.
class CpgNetwork {
public:
    CpgNetwork(NeighbourGraph graph, std::vector<double> internal, std::vector<double> coupling);

    std::size_t hinge_count() const noexcept { return internal_.size(); }
    const NeighbourGraph& graph() const noexcept { return graph_; }
    const std::vector<double>& internal_weights() const noexcept { return internal_; }
    const std::vector<double>& coupling_weights() const noexcept { return coupling_; }

    // Signed weight from x_from into x_to (zero for non-neighbours).
    double coupling(std::size_t from, std::size_t to) const;

    // State layout: [x_0 .. x_{n-1}, y_0 .. y_{n-1}].
    void derivative(std::span<const double> state, std::span<double> out) const;

private:
    NeighbourGraph graph_;
    std::vector<double> internal_;
    std::vector<double> coupling_;
};

// First hinge_count genome entries are the internal weights (hinge order);
// the rest are coupling weights in lexicographic pair order.
CpgNetwork build_cpg(const MorphologyTree& tree, const Genome& genome);

struct CpgState {
    std::vector<double> x;
    std::vector<double> y;

    // Every neuron starts at sqrt(2)/2, giving a unit-amplitude sine for an
    // uncoupled oscillator.
    static CpgState initial(std::size_t hinges);
};

CpgState cpg_step(const CpgNetwork& net, const CpgState& state, double dt);

// out_i = tanh(x_i)
std::vector<double> cpg_output(const CpgState& state);

inline constexpr double kCpgInternalDt = 0.001;

// Open-loop policy: emits tanh(x) and advances the oscillators by one control
// interval using internal RK4 sub-steps.
class CpgPolicy final : public Policy {
public:
    CpgPolicy(CpgNetwork net, double control_dt, double internal_dt = kCpgInternalDt);

    void reset() override;
    void act(const Observation& obs, std::span<double> targets) override;

    const std::vector<double>& packed_state() const noexcept { return state_; }

private:
    CpgNetwork net_;
    double control_dt_;
    std::size_t substeps_;
    double substep_dt_;
    std::vector<double> state_;
    Rk4Workspace ws_;
};

} // namespace morphlearn

#pragma once

#include "morphlearn/error.hpp"
#include "morphlearn/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace morphlearn {

// Scratch buffers for rk4_step; reuse one per integrator to keep the inner
// loop allocation-free.
struct Rk4Workspace {
    std::vector<double> k1, k2, k3, k4, probe;

    void resize(std::size_t n)
    {
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        probe.resize(n);
    }
};

// Classical fixed-step fourth-order Runge-Kutta update of `state` in place.
// `derivative(state, out)` writes d(state)/dt into `out`; the system is
// autonomous.
template <class Derivative>
void rk4_step(Derivative&& derivative, std::span<double> state, double dt, Rk4Workspace& ws)
{
    if (!(dt > 0.0))
        throw NumericError("rk4_step: dt must be positive");
    const std::size_t n = state.size();
    ws.resize(n);

    auto check = [](const std::vector<double>& k, const char* stage) {
        for (double v : k)
            if (!std::isfinite(v))
                throw NumericError(std::string("rk4_step: non-finite derivative at stage ") + stage);
    };

    derivative(std::span<const double>(state.data(), n), std::span<double>(ws.k1));
    check(ws.k1, "k1");
    for (std::size_t i = 0; i < n; ++i)
        ws.probe[i] = state[i] + 0.5 * dt * ws.k1[i];
    derivative(std::span<const double>(ws.probe), std::span<double>(ws.k2));
    check(ws.k2, "k2");
    for (std::size_t i = 0; i < n; ++i)
        ws.probe[i] = state[i] + 0.5 * dt * ws.k2[i];
    derivative(std::span<const double>(ws.probe), std::span<double>(ws.k3));
    check(ws.k3, "k3");
    for (std::size_t i = 0; i < n; ++i)
        ws.probe[i] = state[i] + dt * ws.k3[i];
    derivative(std::span<const double>(ws.probe), std::span<double>(ws.k4));
    check(ws.k4, "k4");

    const double sixth = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
        state[i] += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
}

using DerivativeFn = std::function<void(std::span<const double>, std::span<double>)>;

// Value-semantics convenience wrapper over the in-place kernel.
inline Tensor rk4_step(const DerivativeFn& derivative, const Tensor& state, double dt)
{
    Tensor next = state;
    Rk4Workspace ws;
    rk4_step(derivative, next.values(), dt, ws);
    return next;
}

} // namespace morphlearn

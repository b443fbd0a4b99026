#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "epiforge/dense.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/integrators.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/rng.hpp"

namespace epiforge {

/// Weights and fixed hyperparameters of the deep residual recurrent layer
/// stack. Layer 1 applies an elementwise-gated tanh correction; layers 2..K
/// take normalized residual-descent steps. beta and gamma are the fixed
/// fraction factors of the residual-norm accumulator.
struct DrRnnParams {
    std::size_t n = 0; // state dimension
    std::size_t K = 1; // layer count >= 1

    std::vector<double> W; // length n, elementwise gain of layer 1
    Matrix U;              // n x n mixing matrix of layer 1
    std::vector<double> eta; // K-1 step scalars, eta[i] drives layer i+2

    double beta = 0.9;
    double gamma = 0.1;
    double eps_guard = 1e-8;

    void check() const {
        if (K < 1) raise(ErrorKind::InvalidConfig, "DR-RNN needs at least one layer");
        if (W.size() != n || U.rows != n || U.cols != n || eta.size() != K - 1)
            raise(ErrorKind::DimensionMismatch, "DrRnnParams shapes inconsistent with n=" +
                                                    std::to_string(n) + ", K=" + std::to_string(K));
    }
};

/// Seeded initialization: W, eta ~ U(-0.1, 0.1); U ~ U(-1/sqrt(n), 1/sqrt(n)).
inline DrRnnParams init_drrnn(std::size_t n, std::size_t K, std::uint64_t seed) {
    if (n == 0) raise(ErrorKind::InvalidConfig, "DR-RNN state dimension must be positive");
    if (K < 1) raise(ErrorKind::InvalidConfig, "DR-RNN needs at least one layer");
    DrRnnParams p;
    p.n = n;
    p.K = K;
    Rng rng(seed);
    p.W.resize(n);
    for (auto& w : p.W) w = rng.uniform(-0.1, 0.1);
    p.U = Matrix(n, n);
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& u : p.U.data) u = rng.uniform(-bound, bound);
    p.eta.resize(K - 1);
    for (auto& e : p.eta) e = rng.uniform(-0.1, 0.1);
    return p;
}

/// Per-layer intermediates of one step, retained for diagnostics and for the
/// reverse pass of training.
struct LayerTrace {
    std::vector<std::vector<double>> y; // candidates y^0..y^K (K+1 entries)
    std::vector<std::vector<double>> r; // residuals r^1..r^K
    std::vector<double> H;              // accumulators H_1..H_K
    std::vector<double> tanh_u;         // tanh(U r^1), kept for backprop
};

/// One learned time step: y^0 = y_t, then K residual-reduction layers.
///   r^i = y^{i-1} - y_t - h f(t+h, y^{i-1})
///   H_i = gamma ||r^i||^2 + beta H_{i-1},  H_0 = 0
///   y^1 = y^0 - W o tanh(U r^1)
///   y^i = y^{i-1} - eta_i / sqrt(H_i + eps_guard) * r^i   (i > 1)
/// Exactly K evaluations of f per step.
inline std::vector<double> drrnn_step(const DrRnnParams& params, const OdeSystem& f, double t,
                                      std::span<const double> y_t, double h,
                                      LayerTrace* trace = nullptr) {
    params.check();
    if (y_t.size() != params.n || f.dim() != params.n)
        raise(ErrorKind::DimensionMismatch, "drrnn_step: state/system dimension does not match params");
    if (!detail::all_finite(y_t)) raise(ErrorKind::NonFiniteState, "drrnn_step: input state not finite");

    const std::size_t n = params.n;
    const double t_next = t + h;

    std::vector<double> cur(y_t.begin(), y_t.end());
    std::vector<double> r(n), fval(n), mixed(n);
    double h_acc = 0.0;

    if (trace) {
        trace->y.clear();
        trace->r.clear();
        trace->H.clear();
        trace->tanh_u.clear();
        trace->y.emplace_back(cur);
    }

    for (std::size_t layer = 1; layer <= params.K; ++layer) {
        f.eval(t_next, cur, fval);
        for (std::size_t j = 0; j < n; ++j) r[j] = cur[j] - y_t[j] - h * fval[j];

        double r_sq = 0.0;
        for (double v : r) r_sq += v * v;
        h_acc = params.gamma * r_sq + params.beta * h_acc;

        if (layer == 1) {
            matvec(params.U, r, mixed);
            for (std::size_t j = 0; j < n; ++j) mixed[j] = std::tanh(mixed[j]);
            if (trace) trace->tanh_u = mixed;
            for (std::size_t j = 0; j < n; ++j) cur[j] -= params.W[j] * mixed[j];
        } else {
            const double scale = params.eta[layer - 2] / std::sqrt(h_acc + params.eps_guard);
            for (std::size_t j = 0; j < n; ++j) cur[j] -= scale * r[j];
        }

        if (!detail::all_finite(cur))
            raise(ErrorKind::NonFiniteState,
                  "drrnn_step: non-finite state after layer " + std::to_string(layer));

        if (trace) {
            trace->r.emplace_back(r);
            trace->H.push_back(h_acc);
            trace->y.emplace_back(cur);
        }
    }
    return cur;
}

/// Repeated drrnn_step from y0; cost is exactly K f-evaluations per step.
inline Trajectory drrnn_rollout(const DrRnnParams& params, const OdeSystem& f,
                                std::span<const double> y0, int n_steps, double h, double t0 = 0.0) {
    if (n_steps < 0) raise(ErrorKind::InvalidConfig, "drrnn_rollout: n_steps must be >= 0");
    if (!detail::all_finite(y0)) raise(ErrorKind::NonFiniteState, "drrnn_rollout: initial state not finite");

    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.times.push_back(t0);
    traj.states.emplace_back(y0.begin(), y0.end());
    for (int k = 0; k < n_steps; ++k) {
        const double t = t0 + k * h;
        try {
            traj.states.push_back(drrnn_step(params, f, t, traj.states.back(), h));
        } catch (const Error& err) {
            raise(err.kind(), "step " + std::to_string(k) + ": " + err.what());
        }
        traj.times.push_back(t0 + (k + 1) * h);
    }
    return traj;
}

/// Euclidean norm of each layer residual; the trained stack should shrink
/// these from layer 1 to layer K on most steps.
inline std::vector<double> residual_norm_profile(const LayerTrace& trace) {
    std::vector<double> norms;
    norms.reserve(trace.r.size());
    for (const auto& r : trace.r) {
        double sq = 0.0;
        for (double v : r) sq += v * v;
        norms.push_back(std::sqrt(sq));
    }
    return norms;
}

} // namespace epiforge

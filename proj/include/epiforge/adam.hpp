#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "epiforge/errors.hpp"

namespace epiforge {

/// First/second moment estimates plus the step counter of the Adam
/// optimizer. One state per flat parameter vector.
struct AdamState {
    std::vector<double> m; // first moment
    std::vector<double> v; // second moment
    long step = 0;

    explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One in-place Adam update of `theta` given `grad`, with bias-corrected
/// moment estimates.
inline void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
                      const AdamConfig& config = {}) {
    if (theta.size() != grad.size() || theta.size() != state.m.size() ||
        theta.size() != state.v.size())
        raise(ErrorKind::DimensionMismatch, "adam_step: theta/grad/state sizes differ");
    state.step += 1;
    const double b1t = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double b2t = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t j = 0; j < theta.size(); ++j) {
        state.m[j] = config.beta1 * state.m[j] + (1.0 - config.beta1) * grad[j];
        state.v[j] = config.beta2 * state.v[j] + (1.0 - config.beta2) * grad[j] * grad[j];
        const double m_hat = state.m[j] / b1t;
        const double v_hat = state.v[j] / b2t;
        theta[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
}

} // namespace epiforge

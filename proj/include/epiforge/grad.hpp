#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epiforge/dense.hpp"
#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/losses.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/rnn.hpp"

namespace epiforge {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void ensure_finite_block(std::span<const double> values, const std::string& block) {
    for (double v : values)
        if (!std::isfinite(v))
            raise(ErrorKind::NonFiniteGradient, "non-finite gradient in " + block);
}

inline void append(std::vector<double>& out, std::span<const double> values) {
    out.insert(out.end(), values.begin(), values.end());
}

inline std::span<const double> take(std::span<const double>& rest, std::size_t count,
                                    const char* what) {
    if (rest.size() < count)
        raise(ErrorKind::DimensionMismatch, std::string("flat vector too short for ") + what);
    auto head = rest.subspan(0, count);
    rest = rest.subspan(count);
    return head;
}

} // namespace detail

/// Central-difference gradient of a scalar function of a flat parameter
/// vector. Step is scaled per coordinate: rel_step * (1 + |theta_j|).
template <typename LossFn>
std::vector<double> finite_diff_gradient(LossFn&& loss, std::vector<double> theta,
                                         double rel_step = 1e-5) {
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double step = rel_step * (1.0 + std::abs(theta[j]));
        const double saved = theta[j];
        theta[j] = saved + step;
        const double hi = loss(std::span<const double>(theta));
        theta[j] = saved - step;
        const double lo = loss(std::span<const double>(theta));
        theta[j] = saved;
        grad[j] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// DR-RNN reverse pass
// ---------------------------------------------------------------------------

struct DrRnnGrads {
    std::vector<double> W;   // length n
    Matrix U;                // n x n
    std::vector<double> eta; // length K-1
};

inline DrRnnGrads zero_grads(const DrRnnParams& params) {
    DrRnnGrads g;
    g.W.assign(params.n, 0.0);
    g.U = Matrix(params.n, params.n);
    g.eta.assign(params.K - 1, 0.0);
    return g;
}

/// Reverse pass of one drrnn_step. `trace` must come from the matching
/// forward call; `y_out_bar` is dL/d(step output). Parameter gradients are
/// accumulated into `grads`; the return value is dL/d(y_t), the adjoint of
/// the step input. Costs exactly K vjp evaluations of f.
inline std::vector<double> drrnn_step_backward(const DrRnnParams& params, const OdeSystem& f,
                                               double t, std::span<const double> y_t, double h,
                                               const LayerTrace& trace,
                                               std::span<const double> y_out_bar,
                                               DrRnnGrads& grads) {
    params.check();
    const std::size_t n = params.n;
    const std::size_t K = params.K;
    if (trace.y.size() != K + 1 || trace.r.size() != K || trace.H.size() != K ||
        trace.tanh_u.size() != n)
        raise(ErrorKind::ShapeMismatch, "drrnn_step_backward: trace does not match params");
    if (y_t.size() != n || y_out_bar.size() != n)
        raise(ErrorKind::DimensionMismatch, "drrnn_step_backward: vector lengths do not match n");
    const double t_next = t + h;

    std::vector<double> y_bar(y_out_bar.begin(), y_out_bar.end()); // adjoint of y^i, i = K..0
    std::vector<double> input_bar(n, 0.0); // accumulates the "- y_t" contributions of every r^i
    std::vector<double> H_bar(K + 1, 0.0); // H_bar[i] pairs with trace.H[i-1]
    std::vector<double> r_bar(n), fvjp(n);

    for (std::size_t layer = K; layer >= 2; --layer) {
        const auto& r = trace.r[layer - 1];
        const double H = trace.H[layer - 1];
        const double eta = params.eta[layer - 2];
        const double inv_sqrt = 1.0 / std::sqrt(H + params.eps_guard);
        const double scale = eta * inv_sqrt;

        // y^i = y^{i-1} - scale * r^i, scale = eta / sqrt(H_i + eps)
        double scale_bar = 0.0;
        for (std::size_t j = 0; j < n; ++j) scale_bar -= y_bar[j] * r[j];
        grads.eta[layer - 2] += scale_bar * inv_sqrt;
        H_bar[layer] += scale_bar * eta * (-0.5) * inv_sqrt * inv_sqrt * inv_sqrt;
        for (std::size_t j = 0; j < n; ++j) r_bar[j] = -scale * y_bar[j];
        // y^{i-1} direct term: y_bar carries over unchanged and is augmented below.

        // H_i = gamma ||r^i||^2 + beta H_{i-1}
        for (std::size_t j = 0; j < n; ++j) r_bar[j] += 2.0 * params.gamma * H_bar[layer] * r[j];
        H_bar[layer - 1] += params.beta * H_bar[layer];

        // r^i = y^{i-1} - y_t - h f(t_next, y^{i-1})
        f.vjp(t_next, trace.y[layer - 1], r_bar, fvjp);
        for (std::size_t j = 0; j < n; ++j) {
            y_bar[j] += r_bar[j] - h * fvjp[j];
            input_bar[j] -= r_bar[j];
        }
    }

    // Layer 1: y^1 = y^0 - W o tanh(U r^1)
    const auto& r1 = trace.r[0];
    std::vector<double> g_bar(n); // adjoint of u = U r^1
    for (std::size_t j = 0; j < n; ++j) {
        const double th = trace.tanh_u[j];
        grads.W[j] += -y_bar[j] * th;
        g_bar[j] = -y_bar[j] * params.W[j] * (1.0 - th * th);
    }
    outer_accumulate(grads.U, g_bar, r1);
    matvec_transpose(params.U, g_bar, r_bar);

    // H_1 = gamma ||r^1||^2 (H_0 = 0); H_bar[1] holds only beta-chained terms.
    for (std::size_t j = 0; j < n; ++j) r_bar[j] += 2.0 * params.gamma * H_bar[1] * r1[j];

    // r^1 = y^0 - y_t - h f(t_next, y^0), and y^0 = y_t.
    f.vjp(t_next, trace.y[0], r_bar, fvjp);
    for (std::size_t j = 0; j < n; ++j) {
        y_bar[j] += r_bar[j] - h * fvjp[j];
        input_bar[j] -= r_bar[j];
    }

    for (std::size_t j = 0; j < n; ++j) y_bar[j] += input_bar[j];
    return y_bar;
}

/// One supervised step: state at t, observed state at t + h.
struct TrainingPair {
    double t = 0.0;
    std::vector<double> y_t;
    std::vector<double> y_next;
};

/// Full-batch loss and parameter gradient of the composite objective
///   L = omega_u * mse_u + omega_s * mse_s
/// over teacher-forced one-step predictions. When omega_s == 0 the physics
/// defect is never evaluated. Gradients are accumulated into `grads` (zeroed
/// here first); throws NonFiniteGradient if any accumulated entry is not
/// finite.
inline LossReport drrnn_batch_gradient(const DrRnnParams& params, const OdeSystem& f,
                                       const std::vector<TrainingPair>& pairs, double h,
                                       double omega_u, double omega_s, DrRnnGrads& grads) {
    params.check();
    if (pairs.empty()) raise(ErrorKind::InvalidConfig, "drrnn_batch_gradient: no training pairs");
    if (!(h > 0.0) || !std::isfinite(h))
        raise(ErrorKind::InvalidConfig, "drrnn_batch_gradient: h must be positive");
    const std::size_t n = params.n;
    grads = zero_grads(params);

    const double norm = 1.0 / (static_cast<double>(pairs.size()) * static_cast<double>(n));
    const bool with_physics = omega_s != 0.0;

    double acc_u = 0.0, acc_s = 0.0;
    LayerTrace trace;
    std::vector<double> q(n), fq(n), y_hat_bar(n);
    for (const auto& pair : pairs) {
        if (pair.y_t.size() != n || pair.y_next.size() != n)
            raise(ErrorKind::ShapeMismatch, "training pair length does not match model dimension");
        const double t_next = pair.t + h;
        const std::vector<double> y_hat = drrnn_step(params, f, pair.t, pair.y_t, h, &trace);

        for (std::size_t j = 0; j < n; ++j) {
            const double diff = y_hat[j] - pair.y_next[j];
            acc_u += diff * diff;
            y_hat_bar[j] = 2.0 * norm * omega_u * diff;
        }
        if (with_physics) {
            // q = (y_hat - y_t)/h - f(t_next, y_hat)
            f.eval(t_next, y_hat, q);
            for (std::size_t j = 0; j < n; ++j) {
                q[j] = (y_hat[j] - pair.y_t[j]) / h - q[j];
                acc_s += q[j] * q[j];
            }
            f.vjp(t_next, y_hat, q, fq);
            for (std::size_t j = 0; j < n; ++j)
                y_hat_bar[j] += 2.0 * norm * omega_s * (q[j] / h - fq[j]);
        }
        drrnn_step_backward(params, f, pair.t, pair.y_t, h, trace, y_hat_bar, grads);
        // The physics defect also depends on y_t directly, but y_t is data,
        // not a parameter, so that adjoint is dropped.
    }

    detail::ensure_finite_block(grads.W, "DR-RNN W");
    detail::ensure_finite_block(grads.U.data, "DR-RNN U");
    detail::ensure_finite_block(grads.eta, "DR-RNN eta");

    LossReport report;
    report.mse_u = acc_u * norm;
    report.mse_s = acc_s * norm;
    report.mse_l = combined_loss(report.mse_u, report.mse_s, omega_u, omega_s);
    return report;
}

// ---------------------------------------------------------------------------
// Flat parameter packing (Adam works on one contiguous vector)
// ---------------------------------------------------------------------------

inline std::vector<double> flatten(const DrRnnParams& p) {
    std::vector<double> flat;
    flat.reserve(p.W.size() + p.U.data.size() + p.eta.size());
    detail::append(flat, p.W);
    detail::append(flat, p.U.data);
    detail::append(flat, p.eta);
    return flat;
}

inline std::vector<double> flatten(const DrRnnGrads& g) {
    std::vector<double> flat;
    flat.reserve(g.W.size() + g.U.data.size() + g.eta.size());
    detail::append(flat, g.W);
    detail::append(flat, g.U.data);
    detail::append(flat, g.eta);
    return flat;
}

/// Inverse of flatten(DrRnnParams); shape fields of `p` must already be set.
inline void unflatten(std::span<const double> flat, DrRnnParams& p) {
    p.check();
    std::span<const double> rest = flat;
    auto w = detail::take(rest, p.n, "DR-RNN W");
    auto u = detail::take(rest, p.n * p.n, "DR-RNN U");
    auto e = detail::take(rest, p.K - 1, "DR-RNN eta");
    if (!rest.empty()) raise(ErrorKind::DimensionMismatch, "flat vector too long for DrRnnParams");
    std::copy(w.begin(), w.end(), p.W.begin());
    std::copy(u.begin(), u.end(), p.U.data.begin());
    std::copy(e.begin(), e.end(), p.eta.begin());
}

inline std::vector<double> flatten(const RnnParams& p) {
    std::vector<double> flat;
    detail::append(flat, p.W.data);
    detail::append(flat, p.b);
    detail::append(flat, p.V.data);
    detail::append(flat, p.c);
    return flat;
}

inline void unflatten(std::span<const double> flat, RnnParams& p) {
    p.check();
    std::span<const double> rest = flat;
    auto w = detail::take(rest, p.W.data.size(), "RNN W");
    auto b = detail::take(rest, p.b.size(), "RNN b");
    auto v = detail::take(rest, p.V.data.size(), "RNN V");
    auto c = detail::take(rest, p.c.size(), "RNN c");
    if (!rest.empty()) raise(ErrorKind::DimensionMismatch, "flat vector too long for RnnParams");
    std::copy(w.begin(), w.end(), p.W.data.begin());
    std::copy(b.begin(), b.end(), p.b.begin());
    std::copy(v.begin(), v.end(), p.V.data.begin());
    std::copy(c.begin(), c.end(), p.c.begin());
}

inline std::vector<double> flatten(const LstmParams& p) {
    std::vector<double> flat;
    detail::append(flat, p.Wf.data);
    detail::append(flat, p.Wi.data);
    detail::append(flat, p.Wo.data);
    detail::append(flat, p.Wc.data);
    detail::append(flat, p.bf);
    detail::append(flat, p.bi);
    detail::append(flat, p.bo);
    detail::append(flat, p.bc);
    detail::append(flat, p.V.data);
    detail::append(flat, p.c);
    return flat;
}

inline void unflatten(std::span<const double> flat, LstmParams& p) {
    p.check();
    std::span<const double> rest = flat;
    auto copy_into = [&](std::vector<double>& dst, const char* what) {
        auto src = detail::take(rest, dst.size(), what);
        std::copy(src.begin(), src.end(), dst.begin());
    };
    copy_into(p.Wf.data, "LSTM Wf");
    copy_into(p.Wi.data, "LSTM Wi");
    copy_into(p.Wo.data, "LSTM Wo");
    copy_into(p.Wc.data, "LSTM Wc");
    copy_into(p.bf, "LSTM bf");
    copy_into(p.bi, "LSTM bi");
    copy_into(p.bo, "LSTM bo");
    copy_into(p.bc, "LSTM bc");
    copy_into(p.V.data, "LSTM V");
    copy_into(p.c, "LSTM c");
    if (!rest.empty()) raise(ErrorKind::DimensionMismatch, "flat vector too long for LstmParams");
}

// ---------------------------------------------------------------------------
// Baseline recurrent models: truncated-free BPTT on the L1 trajectory loss
// ---------------------------------------------------------------------------

namespace detail {
inline double l1_sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
} // namespace detail

struct RnnGrads {
    Matrix W;
    std::vector<double> b;
    Matrix V;
    std::vector<double> c;
};

/// Teacher-forced forward over `inputs` with per-step targets, mean-absolute
/// loss, full backpropagation through time. Returns the loss; gradients are
/// written (not accumulated) into `grads`.
inline double rnn_sequence_gradient(const RnnParams& params,
                                    const std::vector<std::vector<double>>& inputs,
                                    const std::vector<std::vector<double>>& targets,
                                    RnnGrads& grads) {
    params.check();
    if (inputs.size() != targets.size() || inputs.empty())
        raise(ErrorKind::ShapeMismatch, "rnn_sequence_gradient: inputs/targets mismatch");
    const std::size_t T = inputs.size();
    const std::size_t m = params.m;

    // Forward, retaining hidden states and predictions.
    std::vector<std::vector<double>> h_states(T + 1, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> x_preds(T);
    for (std::size_t t = 0; t < T; ++t) {
        if (inputs[t].size() != params.p || targets[t].size() != params.q)
            raise(ErrorKind::ShapeMismatch, "rnn_sequence_gradient: row length mismatch");
        auto [h_next, x] = rnn_cell(params, h_states[t], inputs[t]);
        h_states[t + 1] = std::move(h_next);
        x_preds[t] = std::move(x);
    }

    const double norm = 1.0 / (static_cast<double>(T) * static_cast<double>(params.q));
    double loss = 0.0;

    grads.W = Matrix(m, m + params.p);
    grads.b.assign(m, 0.0);
    grads.V = Matrix(params.q, m);
    grads.c.assign(params.q, 0.0);

    std::vector<double> h_bar(m, 0.0), a_bar(m), hz_bar(m + params.p), x_bar(params.q);
    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t j = 0; j < params.q; ++j) {
            const double diff = x_preds[t][j] - targets[t][j];
            loss += std::abs(diff);
            x_bar[j] = detail::l1_sign(diff) * norm;
        }
        // x_t = V h_{t+1} + c
        outer_accumulate(grads.V, x_bar, h_states[t + 1]);
        for (std::size_t j = 0; j < params.q; ++j) grads.c[j] += x_bar[j];
        std::vector<double> vh(m);
        matvec_transpose(params.V, x_bar, vh);
        for (std::size_t j = 0; j < m; ++j) h_bar[j] += vh[j];

        // h_{t+1} = tanh(W [h_t, z_t] + b)
        for (std::size_t j = 0; j < m; ++j) {
            const double hj = h_states[t + 1][j];
            a_bar[j] = h_bar[j] * (1.0 - hj * hj);
        }
        const std::vector<double> hz = detail::concat(h_states[t], inputs[t]);
        outer_accumulate(grads.W, a_bar, hz);
        for (std::size_t j = 0; j < m; ++j) grads.b[j] += a_bar[j];
        matvec_transpose(params.W, a_bar, hz_bar);
        for (std::size_t j = 0; j < m; ++j) h_bar[j] = hz_bar[j]; // adjoint of h_t
    }

    detail::ensure_finite_block(grads.W.data, "RNN W");
    detail::ensure_finite_block(grads.b, "RNN b");
    detail::ensure_finite_block(grads.V.data, "RNN V");
    detail::ensure_finite_block(grads.c, "RNN c");
    return loss * norm;
}

inline std::vector<double> flatten(const RnnGrads& g) {
    std::vector<double> flat;
    detail::append(flat, g.W.data);
    detail::append(flat, g.b);
    detail::append(flat, g.V.data);
    detail::append(flat, g.c);
    return flat;
}

struct LstmGrads {
    Matrix Wf, Wi, Wo, Wc;
    std::vector<double> bf, bi, bo, bc;
    Matrix V;
    std::vector<double> c;
};

inline std::vector<double> flatten(const LstmGrads& g) {
    std::vector<double> flat;
    detail::append(flat, g.Wf.data);
    detail::append(flat, g.Wi.data);
    detail::append(flat, g.Wo.data);
    detail::append(flat, g.Wc.data);
    detail::append(flat, g.bf);
    detail::append(flat, g.bi);
    detail::append(flat, g.bo);
    detail::append(flat, g.bc);
    detail::append(flat, g.V.data);
    detail::append(flat, g.c);
    return flat;
}

/// Teacher-forced LSTM pass with mean-absolute loss and full BPTT.
inline double lstm_sequence_gradient(const LstmParams& params,
                                     const std::vector<std::vector<double>>& inputs,
                                     const std::vector<std::vector<double>>& targets,
                                     LstmGrads& grads) {
    params.check();
    if (inputs.size() != targets.size() || inputs.empty())
        raise(ErrorKind::ShapeMismatch, "lstm_sequence_gradient: inputs/targets mismatch");
    const std::size_t T = inputs.size();
    const std::size_t m = params.m;

    std::vector<std::vector<double>> h_states(T + 1, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> c_states(T + 1, std::vector<double>(m, 0.0));
    std::vector<LstmCellTrace> traces(T);
    std::vector<std::vector<double>> x_preds(T);
    for (std::size_t t = 0; t < T; ++t) {
        if (inputs[t].size() != params.p || targets[t].size() != params.q)
            raise(ErrorKind::ShapeMismatch, "lstm_sequence_gradient: row length mismatch");
        auto [h_next, c_next] = lstm_cell(params, h_states[t], c_states[t], inputs[t], &traces[t]);
        h_states[t + 1] = std::move(h_next);
        c_states[t + 1] = std::move(c_next);
        x_preds[t] = lstm_readout(params, h_states[t + 1]);
    }

    const double norm = 1.0 / (static_cast<double>(T) * static_cast<double>(params.q));
    double loss = 0.0;

    auto zero_matrix = [&](Matrix& mat, std::size_t rows, std::size_t cols) {
        mat = Matrix(rows, cols);
    };
    zero_matrix(grads.Wf, m, m + params.p);
    zero_matrix(grads.Wi, m, m + params.p);
    zero_matrix(grads.Wo, m, m + params.p);
    zero_matrix(grads.Wc, m, m + params.p);
    grads.bf.assign(m, 0.0);
    grads.bi.assign(m, 0.0);
    grads.bo.assign(m, 0.0);
    grads.bc.assign(m, 0.0);
    zero_matrix(grads.V, params.q, m);
    grads.c.assign(params.q, 0.0);

    std::vector<double> h_bar(m, 0.0), c_bar(m, 0.0), x_bar(params.q);
    std::vector<double> af(m), ai(m), ao(m), ag(m), hz_bar(m + params.p), tmp(m + params.p);
    for (std::size_t t = T; t-- > 0;) {
        const auto& tr = traces[t];
        for (std::size_t j = 0; j < params.q; ++j) {
            const double diff = x_preds[t][j] - targets[t][j];
            loss += std::abs(diff);
            x_bar[j] = detail::l1_sign(diff) * norm;
        }
        outer_accumulate(grads.V, x_bar, h_states[t + 1]);
        for (std::size_t j = 0; j < params.q; ++j) grads.c[j] += x_bar[j];
        std::vector<double> vh(m);
        matvec_transpose(params.V, x_bar, vh);
        for (std::size_t j = 0; j < m; ++j) h_bar[j] += vh[j];

        // h = o o tanh(c);  c = f o c_prev + i o g
        for (std::size_t j = 0; j < m; ++j) {
            const double o = tr.o_gate[j];
            const double tc = tr.tanh_c[j];
            ao[j] = h_bar[j] * tc * o * (1.0 - o);             // sigmoid'
            c_bar[j] += h_bar[j] * o * (1.0 - tc * tc);        // through tanh(c)
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double fg = tr.f_gate[j];
            const double ig = tr.i_gate[j];
            const double g = tr.g_candidate[j];
            af[j] = c_bar[j] * c_states[t][j] * fg * (1.0 - fg);
            ai[j] = c_bar[j] * g * ig * (1.0 - ig);
            ag[j] = c_bar[j] * ig * (1.0 - g * g);
            c_bar[j] *= fg; // adjoint of c_prev
        }

        const std::vector<double> hz = detail::concat(h_states[t], inputs[t]);
        outer_accumulate(grads.Wf, af, hz);
        outer_accumulate(grads.Wi, ai, hz);
        outer_accumulate(grads.Wo, ao, hz);
        outer_accumulate(grads.Wc, ag, hz);
        for (std::size_t j = 0; j < m; ++j) {
            grads.bf[j] += af[j];
            grads.bi[j] += ai[j];
            grads.bo[j] += ao[j];
            grads.bc[j] += ag[j];
        }
        std::fill(hz_bar.begin(), hz_bar.end(), 0.0);
        matvec_transpose(params.Wf, af, tmp);
        for (std::size_t j = 0; j < hz_bar.size(); ++j) hz_bar[j] += tmp[j];
        matvec_transpose(params.Wi, ai, tmp);
        for (std::size_t j = 0; j < hz_bar.size(); ++j) hz_bar[j] += tmp[j];
        matvec_transpose(params.Wo, ao, tmp);
        for (std::size_t j = 0; j < hz_bar.size(); ++j) hz_bar[j] += tmp[j];
        matvec_transpose(params.Wc, ag, tmp);
        for (std::size_t j = 0; j < hz_bar.size(); ++j) hz_bar[j] += tmp[j];
        for (std::size_t j = 0; j < m; ++j) h_bar[j] = hz_bar[j];
    }

    detail::ensure_finite_block(grads.Wf.data, "LSTM Wf");
    detail::ensure_finite_block(grads.Wi.data, "LSTM Wi");
    detail::ensure_finite_block(grads.Wo.data, "LSTM Wo");
    detail::ensure_finite_block(grads.Wc.data, "LSTM Wc");
    detail::ensure_finite_block(grads.bf, "LSTM bf");
    detail::ensure_finite_block(grads.bi, "LSTM bi");
    detail::ensure_finite_block(grads.bo, "LSTM bo");
    detail::ensure_finite_block(grads.bc, "LSTM bc");
    detail::ensure_finite_block(grads.V.data, "LSTM V");
    detail::ensure_finite_block(grads.c, "LSTM c");
    return loss * norm;
}

} // namespace epiforge

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "epiforge/dense.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/rng.hpp"

namespace epiforge {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Plain recurrent cell: h_t = tanh(W [h_{t-1}, z_t] + b), x_t = V h_t + c.
struct RnnParams {
    std::size_t m = 0; // hidden size
    std::size_t p = 0; // input size
    std::size_t q = 0; // output size
    Matrix W;          // m x (m+p)
    std::vector<double> b; // m
    Matrix V;          // q x m
    std::vector<double> c; // q

    void check() const {
        if (W.rows != m || W.cols != m + p || b.size() != m || V.rows != q || V.cols != m ||
            c.size() != q)
            raise(ErrorKind::DimensionMismatch, "RnnParams shapes inconsistent");
    }
};

/// LSTM gates plus the same affine readout the plain RNN uses; the standard
/// cell equations define the recurrence, the readout maps hidden state to a
/// predicted system state.
struct LstmParams {
    std::size_t m = 0;
    std::size_t p = 0;
    std::size_t q = 0;
    Matrix Wf, Wi, Wo, Wc; // each m x (m+p)
    std::vector<double> bf, bi, bo, bc; // each m
    Matrix V;              // q x m readout
    std::vector<double> c; // q

    void check() const {
        auto gate_ok = [&](const Matrix& g) { return g.rows == m && g.cols == m + p; };
        if (!gate_ok(Wf) || !gate_ok(Wi) || !gate_ok(Wo) || !gate_ok(Wc) || bf.size() != m ||
            bi.size() != m || bo.size() != m || bc.size() != m || V.rows != q || V.cols != m ||
            c.size() != q)
            raise(ErrorKind::DimensionMismatch, "LstmParams shapes inconsistent");
    }
};

inline RnnParams init_rnn(std::size_t m, std::size_t p, std::size_t q, std::uint64_t seed) {
    RnnParams params;
    params.m = m;
    params.p = p;
    params.q = q;
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(m));
    params.W = Matrix(m, m + p);
    for (auto& v : params.W.data) v = rng.uniform(-bound, bound);
    params.b.assign(m, 0.0);
    for (auto& v : params.b) v = rng.uniform(-bound, bound);
    params.V = Matrix(q, m);
    for (auto& v : params.V.data) v = rng.uniform(-bound, bound);
    params.c.assign(q, 0.0);
    for (auto& v : params.c) v = rng.uniform(-bound, bound);
    return params;
}

inline LstmParams init_lstm(std::size_t m, std::size_t p, std::size_t q, std::uint64_t seed) {
    LstmParams params;
    params.m = m;
    params.p = p;
    params.q = q;
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(m));
    auto fill_matrix = [&](Matrix& mat, std::size_t rows, std::size_t cols) {
        mat = Matrix(rows, cols);
        for (auto& v : mat.data) v = rng.uniform(-bound, bound);
    };
    auto fill_vec = [&](std::vector<double>& vec, std::size_t len) {
        vec.assign(len, 0.0);
        for (auto& v : vec) v = rng.uniform(-bound, bound);
    };
    fill_matrix(params.Wf, m, m + p);
    fill_matrix(params.Wi, m, m + p);
    fill_matrix(params.Wo, m, m + p);
    fill_matrix(params.Wc, m, m + p);
    fill_vec(params.bf, m);
    fill_vec(params.bi, m);
    fill_vec(params.bo, m);
    fill_vec(params.bc, m);
    fill_matrix(params.V, q, m);
    fill_vec(params.c, q);
    return params;
}

namespace detail {

inline std::vector<double> concat(std::span<const double> h_prev, std::span<const double> z) {
    std::vector<double> hz;
    hz.reserve(h_prev.size() + z.size());
    hz.insert(hz.end(), h_prev.begin(), h_prev.end());
    hz.insert(hz.end(), z.begin(), z.end());
    return hz;
}

} // namespace detail

/// Returns (h_t, x_t).
inline std::pair<std::vector<double>, std::vector<double>> rnn_cell(const RnnParams& params,
                                                                    std::span<const double> h_prev,
                                                                    std::span<const double> z_t) {
    params.check();
    if (h_prev.size() != params.m || z_t.size() != params.p)
        raise(ErrorKind::DimensionMismatch, "rnn_cell: input shapes disagree with params");
    const std::vector<double> hz = detail::concat(h_prev, z_t);
    std::vector<double> h(params.m);
    matvec(params.W, hz, h);
    for (std::size_t j = 0; j < params.m; ++j) h[j] = std::tanh(h[j] + params.b[j]);
    std::vector<double> x(params.q);
    matvec(params.V, h, x);
    for (std::size_t j = 0; j < params.q; ++j) x[j] += params.c[j];
    return {std::move(h), std::move(x)};
}

/// Gate activations of one LSTM step, retained for backpropagation.
struct LstmCellTrace {
    std::vector<double> f_gate, i_gate, o_gate, g_candidate; // g = tanh(Wc hz + bc)
    std::vector<double> c_state, h_state, tanh_c;
};

/// Returns (h_t, c_t). Gates by sigmoid, candidate by tanh:
///   c_t = f_t o c_{t-1} + i_t o tanh(Wc [h,z] + bc),  h_t = o_t o tanh(c_t).
inline std::pair<std::vector<double>, std::vector<double>> lstm_cell(const LstmParams& params,
                                                                     std::span<const double> h_prev,
                                                                     std::span<const double> c_prev,
                                                                     std::span<const double> z_t,
                                                                     LstmCellTrace* trace = nullptr) {
    params.check();
    if (h_prev.size() != params.m || c_prev.size() != params.m || z_t.size() != params.p)
        raise(ErrorKind::DimensionMismatch, "lstm_cell: input shapes disagree with params");

    const std::vector<double> hz = detail::concat(h_prev, z_t);
    const std::size_t m = params.m;
    std::vector<double> f_gate(m), i_gate(m), o_gate(m), g(m);
    matvec(params.Wf, hz, f_gate);
    matvec(params.Wi, hz, i_gate);
    matvec(params.Wo, hz, o_gate);
    matvec(params.Wc, hz, g);
    for (std::size_t j = 0; j < m; ++j) {
        f_gate[j] = sigmoid(f_gate[j] + params.bf[j]);
        i_gate[j] = sigmoid(i_gate[j] + params.bi[j]);
        o_gate[j] = sigmoid(o_gate[j] + params.bo[j]);
        g[j] = std::tanh(g[j] + params.bc[j]);
    }
    std::vector<double> c_state(m), h_state(m), tanh_c(m);
    for (std::size_t j = 0; j < m; ++j) {
        c_state[j] = f_gate[j] * c_prev[j] + i_gate[j] * g[j];
        tanh_c[j] = std::tanh(c_state[j]);
        h_state[j] = o_gate[j] * tanh_c[j];
    }
    if (trace) {
        trace->f_gate = f_gate;
        trace->i_gate = i_gate;
        trace->o_gate = o_gate;
        trace->g_candidate = g;
        trace->c_state = c_state;
        trace->h_state = h_state;
        trace->tanh_c = tanh_c;
    }
    return {std::move(h_state), std::move(c_state)};
}

inline std::vector<double> lstm_readout(const LstmParams& params, std::span<const double> h) {
    std::vector<double> x(params.q);
    matvec(params.V, h, x);
    for (std::size_t j = 0; j < params.q; ++j) x[j] += params.c[j];
    return x;
}

/// Teacher-forced pass over the history, then closed-loop rollout feeding
/// predictions back as inputs. Returns the `horizon` closed-loop predictions.
/// Requires p == q (the prediction is the next input).
inline std::vector<std::vector<double>> sequence_forecast(const RnnParams& params,
                                                          const std::vector<std::vector<double>>& history,
                                                          int horizon) {
    params.check();
    if (history.empty()) raise(ErrorKind::InvalidConfig, "sequence_forecast: history is empty");
    if (params.p != params.q)
        raise(ErrorKind::DimensionMismatch, "closed-loop forecast needs matching input/output sizes");

    std::vector<double> h(params.m, 0.0), x;
    for (const auto& z : history) {
        auto [h_next, x_next] = rnn_cell(params, h, z);
        h = std::move(h_next);
        x = std::move(x_next);
    }
    std::vector<std::vector<double>> forecast;
    forecast.reserve(std::max(horizon, 0));
    for (int step = 0; step < horizon; ++step) {
        forecast.push_back(x);
        auto [h_next, x_next] = rnn_cell(params, h, x);
        h = std::move(h_next);
        x = std::move(x_next);
    }
    return forecast;
}

inline std::vector<std::vector<double>> sequence_forecast(const LstmParams& params,
                                                          const std::vector<std::vector<double>>& history,
                                                          int horizon) {
    params.check();
    if (history.empty()) raise(ErrorKind::InvalidConfig, "sequence_forecast: history is empty");
    if (params.p != params.q)
        raise(ErrorKind::DimensionMismatch, "closed-loop forecast needs matching input/output sizes");

    std::vector<double> h(params.m, 0.0), c(params.m, 0.0);
    std::vector<double> x;
    for (const auto& z : history) {
        auto [h_next, c_next] = lstm_cell(params, h, c, z);
        h = std::move(h_next);
        c = std::move(c_next);
        x = lstm_readout(params, h);
    }
    std::vector<std::vector<double>> forecast;
    forecast.reserve(std::max(horizon, 0));
    for (int step = 0; step < horizon; ++step) {
        forecast.push_back(x);
        auto [h_next, c_next] = lstm_cell(params, h, c, x);
        h = std::move(h_next);
        c = std::move(c_next);
        x = lstm_readout(params, h);
    }
    return forecast;
}

} // namespace epiforge

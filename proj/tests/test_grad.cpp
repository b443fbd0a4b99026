#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grad.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/seird.hpp"

using namespace epiforge;

namespace {

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        worst = std::max(worst, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(b[j])));
    return worst;
}

std::vector<TrainingPair> random_pairs(std::size_t count, std::size_t n, Rng& rng) {
    std::vector<TrainingPair> pairs(count);
    for (std::size_t k = 0; k < count; ++k) {
        pairs[k].t = static_cast<double>(k);
        pairs[k].y_t.resize(n);
        pairs[k].y_next.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            pairs[k].y_t[j] = rng.uniform(0.1, 1.0);
            pairs[k].y_next[j] = pairs[k].y_t[j] + rng.uniform(-0.1, 0.1);
        }
    }
    return pairs;
}

} // namespace

TEST_CASE("finite_diff_gradient recovers the gradient of a quadratic") {
    const auto loss = [](std::span<const double> x) {
        return x[0] * x[0] + 3.0 * x[1] * x[1] + x[0] * x[1];
    };
    const std::vector<double> x = {1.5, -2.0};
    const auto g = finite_diff_gradient(loss, x);
    REQUIRE(g[0] == Catch::Approx(2.0 * 1.5 - 2.0).margin(1e-6));
    REQUIRE(g[1] == Catch::Approx(-12.0 + 1.5).margin(1e-6));
}

TEST_CASE("DR-RNN flatten/unflatten round-trips in W,U,eta order") {
    const DrRnnParams p = init_drrnn(3, 3, 4);
    const auto flat = flatten(p);
    REQUIRE(flat.size() == 3 + 9 + 2);
    REQUIRE(flat[0] == p.W[0]);
    REQUIRE(flat[3] == p.U.data[0]);
    REQUIRE(flat[12] == p.eta[0]);

    DrRnnParams q = init_drrnn(3, 3, 999);
    unflatten(flat, q);
    REQUIRE(q.W == p.W);
    REQUIRE(q.U.data == p.U.data);
    REQUIRE(q.eta == p.eta);

    std::vector<double> short_vec(13);
    REQUIRE_THROWS_AS(unflatten(short_vec, q), Error);
}

TEST_CASE("DR-RNN analytic gradient matches finite differences") {
    Rng rng(1234);
    for (int inst = 0; inst < 6; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(inst) % 4;
        const std::size_t K = 1 + static_cast<std::size_t>(inst) % 3;
        Matrix a(n, n);
        for (auto& v : a.data) v = rng.uniform(-1.0, 1.0);
        const LinearSystem f(std::move(a));
        const auto pairs = random_pairs(3, n, rng);
        const double omega_u = 1.0, omega_s = (inst % 2 == 0) ? 0.7 : 0.0;

        DrRnnParams params = init_drrnn(n, K, 100 + static_cast<std::uint64_t>(inst));
        DrRnnGrads grads = zero_grads(params);
        drrnn_batch_gradient(params, f, pairs, 0.25, omega_u, omega_s, grads);

        const auto loss = [&](std::span<const double> point) {
            DrRnnParams probe = params;
            unflatten(point, probe);
            DrRnnGrads scratch = zero_grads(probe);
            return drrnn_batch_gradient(probe, f, pairs, 0.25, omega_u, omega_s, scratch).mse_l;
        };
        const auto numeric = finite_diff_gradient(loss, flatten(params));
        REQUIRE(max_rel_error(flatten(grads), numeric) <= 1e-6);
    }
}

TEST_CASE("DR-RNN gradient check also holds with the SEIRD right-hand side") {
    SeirdParams sp;
    sp.phi_i = 0.3;
    sp.phi_e = 0.2;
    sp.alpha_inc = 0.2;
    sp.gamma_e = 0.1;
    sp.gamma_i = 0.08;
    sp.delta = 0.01;
    sp.allee = 0.05;
    const Seird0dSystem f{ParamSchedule(sp)};

    Rng rng(555);
    std::vector<TrainingPair> pairs(4);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        pairs[k].t = static_cast<double>(k);
        pairs[k].y_t = {rng.uniform(0.5, 1.0), rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1),
                        rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.05)};
        pairs[k].y_next = pairs[k].y_t;
        for (auto& v : pairs[k].y_next) v += rng.uniform(-0.02, 0.02);
    }

    DrRnnParams params = init_drrnn(5, 4, 2024);
    DrRnnGrads grads = zero_grads(params);
    drrnn_batch_gradient(params, f, pairs, 1.0, 1.0, 0.5, grads);

    const auto loss = [&](std::span<const double> point) {
        DrRnnParams probe = params;
        unflatten(point, probe);
        DrRnnGrads scratch = zero_grads(probe);
        return drrnn_batch_gradient(probe, f, pairs, 1.0, 1.0, 0.5, scratch).mse_l;
    };
    const auto numeric = finite_diff_gradient(loss, flatten(params));
    REQUIRE(max_rel_error(flatten(grads), numeric) <= 1e-6);
}

TEST_CASE("batch gradient reports the loss decomposition it optimizes") {
    Rng rng(9);
    const std::size_t n = 3;
    Matrix a(n, n);
    for (auto& v : a.data) v = rng.uniform(-0.5, 0.5);
    const LinearSystem f(std::move(a));
    const auto pairs = random_pairs(5, n, rng);
    DrRnnParams params = init_drrnn(n, 2, 77);
    DrRnnGrads grads = zero_grads(params);

    const LossReport rep = drrnn_batch_gradient(params, f, pairs, 0.5, 2.0, 0.25, grads);
    REQUIRE(rep.mse_l == 2.0 * rep.mse_u + 0.25 * rep.mse_s);
    REQUIRE(rep.mse_u >= 0.0);
    REQUIRE(rep.mse_s >= 0.0);

    // omega_s = 0 must skip the physics term entirely (exact zero, and no
    // f evaluations beyond the K per forward step).
    const ZeroSystem inner(n);
    CountingSystem counting(inner);
    DrRnnGrads g2 = zero_grads(params);
    const LossReport rep2 = drrnn_batch_gradient(params, counting, pairs, 0.5, 1.0, 0.0, g2);
    REQUIRE(rep2.mse_s == 0.0);
    REQUIRE(rep2.mse_l == rep2.mse_u);
    // Forward pass: K evals; backward vjp: K more. No physics extras.
    REQUIRE(counting.eval_count() == static_cast<long>(pairs.size() * params.K));
}

TEST_CASE("RNN sequence gradient matches finite differences") {
    const std::size_t m = 3, d = 2, T = 4;
    RnnParams params = init_rnn(m, d, d, 31);
    Rng rng(77);
    std::vector<std::vector<double>> inputs(T, std::vector<double>(d));
    for (auto& row : inputs)
        for (auto& v : row) v = rng.uniform(-1.0, 1.0);

    // Put targets a safe margin away from the predictions so the mean
    // absolute loss is smooth in the probed neighborhood.
    std::vector<std::vector<double>> targets(T, std::vector<double>(d));
    {
        std::vector<double> h(m, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            auto [h_next, x] = rnn_cell(params, h, inputs[t]);
            h = h_next;
            for (std::size_t j = 0; j < d; ++j) {
                const double off = rng.uniform(0.3, 0.7);
                targets[t][j] = x[j] + (rng.uniform01() < 0.5 ? -off : off);
            }
        }
    }

    RnnGrads grads;
    const double loss_value = rnn_sequence_gradient(params, inputs, targets, grads);
    REQUIRE(loss_value > 0.0);

    const auto loss = [&](std::span<const double> point) {
        RnnParams probe = params;
        unflatten(point, probe);
        RnnGrads scratch;
        return rnn_sequence_gradient(probe, inputs, targets, scratch);
    };
    const auto numeric = finite_diff_gradient(loss, flatten(params));
    REQUIRE(max_rel_error(flatten(grads), numeric) <= 1e-6);
}

TEST_CASE("LSTM sequence gradient matches finite differences") {
    const std::size_t m = 3, d = 2, T = 5;
    LstmParams params = init_lstm(m, d, d, 41);
    Rng rng(78);
    std::vector<std::vector<double>> inputs(T, std::vector<double>(d));
    for (auto& row : inputs)
        for (auto& v : row) v = rng.uniform(-1.0, 1.0);

    std::vector<std::vector<double>> targets(T, std::vector<double>(d));
    {
        std::vector<double> h(m, 0.0), c(m, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            auto [h_next, c_next] = lstm_cell(params, h, c, inputs[t]);
            h = h_next;
            c = c_next;
            const auto x = lstm_readout(params, h);
            for (std::size_t j = 0; j < d; ++j) {
                const double off = rng.uniform(0.3, 0.7);
                targets[t][j] = x[j] + (rng.uniform01() < 0.5 ? -off : off);
            }
        }
    }

    LstmGrads grads;
    const double loss_value = lstm_sequence_gradient(params, inputs, targets, grads);
    REQUIRE(loss_value > 0.0);

    const auto loss = [&](std::span<const double> point) {
        LstmParams probe = params;
        unflatten(point, probe);
        LstmGrads scratch;
        return lstm_sequence_gradient(probe, inputs, targets, scratch);
    };
    const auto numeric = finite_diff_gradient(loss, flatten(params));
    REQUIRE(max_rel_error(flatten(grads), numeric) <= 1e-6);
}

TEST_CASE("L1 loss value matches a naive recomputation") {
    const std::size_t m = 2, d = 2, T = 3;
    const RnnParams params = init_rnn(m, d, d, 3);
    std::vector<std::vector<double>> inputs(T, std::vector<double>(d, 0.25));
    std::vector<std::vector<double>> targets(T, std::vector<double>(d, 1.0));

    RnnGrads grads;
    const double loss = rnn_sequence_gradient(params, inputs, targets, grads);

    std::vector<double> h(m, 0.0);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        auto [h_next, x] = rnn_cell(params, h, inputs[t]);
        h = h_next;
        for (std::size_t j = 0; j < d; ++j) acc += std::abs(x[j] - targets[t][j]);
    }
    REQUIRE(loss == Catch::Approx(acc / (T * d)).margin(1e-14));
}

TEST_CASE("gradient helpers reject shape mismatches") {
    RnnParams params = init_rnn(2, 2, 2, 1);
    RnnGrads grads;
    const std::vector<std::vector<double>> xs(2, std::vector<double>(2, 0.0));
    const std::vector<std::vector<double>> bad(3, std::vector<double>(2, 0.0));
    REQUIRE_THROWS_AS(rnn_sequence_gradient(params, xs, bad, grads), Error);
}

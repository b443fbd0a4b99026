#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epiforge/data_io.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/losses.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/rng.hpp"
#include "epiforge/seird.hpp"

using namespace epiforge;

namespace {

SnapshotMatrix make_snapshot(std::vector<int> days, std::size_t n_cells,
                             std::vector<std::vector<double>> rows) {
    SnapshotMatrix snap;
    snap.days = std::move(days);
    snap.n_cells = n_cells;
    snap.rows = std::move(rows);
    return snap;
}

} // namespace

TEST_CASE("mse_data over raw batches") {
    const std::vector<std::vector<double>> a = {{1.0, 2.0}, {3.0, 4.0}};
    const std::vector<std::vector<double>> b = {{1.0, 2.5}, {2.0, 4.0}};
    // squared diffs: 0, 0.25, 1, 0 -> mean 0.3125
    REQUIRE(mse_data(a, b) == Catch::Approx(0.3125).margin(1e-15));
    REQUIRE(mse_data(a, a) == 0.0);

    const std::vector<std::vector<double>> ragged = {{1.0}, {2.0, 3.0}};
    REQUIRE_THROWS_AS(mse_data(a, ragged), Error);
    const std::vector<std::vector<double>> empty;
    REQUIRE_THROWS_AS(mse_data(empty, empty), Error);
}

TEST_CASE("snapshot mse_data checks day alignment") {
    auto a = make_snapshot({0, 1}, 1, {{1, 0, 0, 0, 0}, {2, 0, 0, 0, 0}});
    auto b = a;
    REQUIRE(mse_data(a, b) == 0.0);
    b.days[1] = 2;
    REQUIRE_THROWS_WITH(mse_data(a, b), Catch::Matchers::ContainsSubstring("day"));
    auto c = make_snapshot({0}, 1, {{1, 0, 0, 0, 0}});
    REQUIRE_THROWS_AS(mse_data(a, c), Error);
}

TEST_CASE("compartment_mse splits the error by compartment") {
    // Two cells, one row. Errors: s off by 1 in both cells, i off by 2 in
    // one cell, everything else exact.
    const std::vector<double> obs = {1.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0};
    std::vector<double> pred = obs;
    pred[0] += 1.0;
    pred[1] += 1.0;
    pred[4] += 2.0;
    auto truth = make_snapshot({3}, 2, {obs});
    auto guess = make_snapshot({3}, 2, {pred});

    const LossReport rep = compartment_mse(guess, truth);
    REQUIRE(rep.per_compartment[0] == Catch::Approx(1.0).margin(1e-15)); // s: (1+1)/2
    REQUIRE(rep.per_compartment[1] == 0.0);                              // e
    REQUIRE(rep.per_compartment[2] == Catch::Approx(2.0).margin(1e-15)); // i: (4+0)/2
    REQUIRE(rep.per_compartment[3] == 0.0);                              // r
    REQUIRE(rep.per_compartment[4] == 0.0);                              // d
    REQUIRE(rep.mse_u == Catch::Approx(6.0 / 10.0).margin(1e-15));
    REQUIRE(rep.mse_l == rep.mse_u);

    // Overall equals the mean of the per-compartment values.
    double mean = 0.0;
    for (double v : rep.per_compartment) mean += v;
    mean /= kCompartments;
    REQUIRE(rep.mse_u == Catch::Approx(mean).margin(1e-15));
}

TEST_CASE("combined_loss algebra and validation") {
    REQUIRE(combined_loss(0.25, 0.5, 2.0, 4.0) == 2.5);
    REQUIRE(combined_loss(0.25, 123.0, 1.0, 0.0) == 0.25);
    REQUIRE_THROWS_AS(combined_loss(-1e-12, 0.0, 1.0, 1.0), Error);
    REQUIRE_THROWS_AS(combined_loss(0.0, -1.0, 1.0, 1.0), Error);
}

TEST_CASE("batch mse_physics matches a naive recomputation") {
    Rng rng(404);
    const std::size_t n = 3;
    Matrix a(n, n);
    for (auto& v : a.data) v = rng.uniform(-1.0, 1.0);
    const LinearSystem f(std::move(a));

    std::vector<std::vector<double>> predicted(4, std::vector<double>(n));
    std::vector<std::vector<double>> previous(4, std::vector<double>(n));
    std::vector<double> t_next(4);
    for (std::size_t k = 0; k < 4; ++k) {
        t_next[k] = 0.5 * static_cast<double>(k) + 0.25;
        for (std::size_t j = 0; j < n; ++j) {
            predicted[k][j] = rng.uniform(-1.0, 1.0);
            previous[k][j] = rng.uniform(-1.0, 1.0);
        }
    }
    const double h = 0.25;
    const double got = mse_physics(predicted, previous, t_next, h, f);

    double acc = 0.0;
    std::vector<double> rate(n);
    for (std::size_t k = 0; k < 4; ++k) {
        f.eval(t_next[k], predicted[k], rate);
        for (std::size_t j = 0; j < n; ++j) {
            const double defect = (predicted[k][j] - previous[k][j]) / h - rate[j];
            acc += defect * defect;
        }
    }
    REQUIRE(got == Catch::Approx(acc / 12.0).margin(1e-15));

    // A batch of exact implicit-Euler steps has zero defect.
    const ZeroSystem zero(n);
    REQUIRE(mse_physics(previous, previous, t_next, h, zero) == 0.0);

    REQUIRE_THROWS_AS(mse_physics(predicted, previous, {0.0}, h, f), Error);
    REQUIRE_THROWS_AS(mse_physics(predicted, previous, t_next, 0.0, f), Error);
}

TEST_CASE("trajectory mse_physics is zero for an exact steady state") {
    const Grid grid = build_grid(4, 4, 1.0);
    SeirdParams params; // all rates zero -> any constant field is steady
    params.validate();

    const std::size_t n = static_cast<std::size_t>(grid.n_cells());
    std::vector<double> row(5 * n, 0.0);
    for (std::size_t cell = 0; cell < n; ++cell) row[cell] = 1.0; // s = 1
    auto snap = make_snapshot({0, 1, 2}, n, {row, row, row});
    REQUIRE(mse_physics(snap, params, grid, 1.0) == 0.0);

    // Moving mass without dynamics creates a nonzero defect.
    auto moving = snap;
    moving.rows[1][0] += 0.5;
    REQUIRE(mse_physics(moving, params, grid, 1.0) > 0.0);

    auto single = make_snapshot({0}, n, {row});
    REQUIRE_THROWS_AS(mse_physics(single, params, grid, 1.0), Error);
}

TEST_CASE("trajectory_l1_loss hand case") {
    const std::vector<std::vector<std::vector<double>>> pred = {
        {{1.0, 2.0}, {3.0, 4.0}},
        {{0.0, 0.0}, {0.0, 0.0}},
    };
    const std::vector<std::vector<std::vector<double>>> target = {
        {{1.5, 2.0}, {3.0, 3.0}},
        {{1.0, -1.0}, {0.0, 0.0}},
    };
    // |diffs|: 0.5, 0, 0, 1, 1, 1, 0, 0 -> mean 3.5/8
    REQUIRE(trajectory_l1_loss(pred, target) == Catch::Approx(0.4375).margin(1e-15));
    REQUIRE_THROWS_AS(trajectory_l1_loss(pred, {{{1.0}}}), Error);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/rng.hpp"

using namespace epiforge;

namespace {

// Independent reference: gather form, looping over every cell's neighbors
// instead of over faces. Algebraically identical, structurally different.
std::vector<double> reference_laplacian(const std::vector<double>& u,
                                        const std::vector<double>& c, const Grid& g) {
    std::vector<double> out(u.size(), 0.0);
    for (int y = 0; y < g.ny; ++y) {
        for (int x = 0; x < g.nx; ++x) {
            const int k = g.index(x, y);
            const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            double acc = 0.0;
            for (const auto& nb : nbrs) {
                if (nb[0] < 0 || nb[0] >= g.nx || nb[1] < 0 || nb[1] >= g.ny) continue;
                const int j = g.index(nb[0], nb[1]);
                acc += 0.5 * (c[static_cast<std::size_t>(k)] + c[static_cast<std::size_t>(j)]) *
                       (u[static_cast<std::size_t>(j)] - u[static_cast<std::size_t>(k)]);
            }
            out[static_cast<std::size_t>(k)] = acc / (g.dx * g.dx);
        }
    }
    return out;
}

} // namespace

TEST_CASE("build_grid validates shape and spacing") {
    const Grid g = build_grid(4, 5, 2.0);
    REQUIRE(g.n_cells() == 20);
    REQUIRE(g.index(3, 4) == 19);
    REQUIRE(g.index(1, 2) == 2 * 4 + 1);
    REQUIRE(g.center_x(0) == 1.0);
    REQUIRE(g.center_y(4) == 9.0);
    REQUIRE_THROWS_AS(build_grid(2, 5, 1.0), Error);
    REQUIRE_THROWS_AS(build_grid(5, 2, 1.0), Error);
    REQUIRE_THROWS_AS(build_grid(5, 5, 0.0), Error);
    REQUIRE_THROWS_AS(build_grid(5, 5, -1.0), Error);
}

TEST_CASE("laplacian of a constant field is exactly zero") {
    const Grid g = build_grid(6, 4, 0.5);
    const std::vector<double> u(static_cast<std::size_t>(g.n_cells()), 3.25);
    std::vector<double> c(static_cast<std::size_t>(g.n_cells()));
    Rng rng(7);
    for (auto& v : c) v = rng.uniform(0.1, 2.0);
    const auto out = laplacian_varcoef(u, c, g);
    for (double v : out) REQUIRE(v == 0.0);
}

TEST_CASE("laplacian matches the gather-form reference on random fields") {
    const Grid g = build_grid(7, 5, 0.8);
    const auto n = static_cast<std::size_t>(g.n_cells());
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> u(n), c(n);
        for (auto& v : u) v = rng.uniform(-2.0, 2.0);
        for (auto& v : c) v = rng.uniform(0.0, 1.5);
        const auto got = laplacian_varcoef(u, c, g);
        const auto want = reference_laplacian(u, c, g);
        for (std::size_t k = 0; k < n; ++k)
            REQUIRE(got[k] == Catch::Approx(want[k]).margin(1e-13));
    }
}

TEST_CASE("laplacian output sums to zero on random inputs") {
    const Grid g = build_grid(9, 9, 1.3);
    const auto n = static_cast<std::size_t>(g.n_cells());
    Rng rng(321);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> u(n), c(n);
        double scale = 0.0;
        for (auto& v : u) {
            v = rng.uniform(-5.0, 5.0);
            scale += std::abs(v);
        }
        for (auto& v : c) v = rng.uniform(0.0, 3.0);
        const auto out = laplacian_varcoef(u, c, g);
        double total = 0.0;
        for (double v : out) total += v;
        REQUIRE(std::abs(total) <= 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("laplacian hand example on a 1D-like strip") {
    // 3x3 grid, dx = 1, unit coefficient, u nonzero only at the center:
    // center gets -4u, each edge neighbor +u (classic 5-point stencil).
    const Grid g = build_grid(3, 3, 1.0);
    std::vector<double> u(9, 0.0), c(9, 1.0);
    u[static_cast<std::size_t>(g.index(1, 1))] = 2.0;
    const auto out = laplacian_varcoef(u, c, g);
    REQUIRE(out[static_cast<std::size_t>(g.index(1, 1))] == Catch::Approx(-8.0));
    REQUIRE(out[static_cast<std::size_t>(g.index(0, 1))] == Catch::Approx(2.0));
    REQUIRE(out[static_cast<std::size_t>(g.index(2, 1))] == Catch::Approx(2.0));
    REQUIRE(out[static_cast<std::size_t>(g.index(1, 0))] == Catch::Approx(2.0));
    REQUIRE(out[static_cast<std::size_t>(g.index(1, 2))] == Catch::Approx(2.0));
    REQUIRE(out[static_cast<std::size_t>(g.index(0, 0))] == 0.0);
}

TEST_CASE("laplacian rejects mismatched field lengths") {
    const Grid g = build_grid(3, 3, 1.0);
    std::vector<double> u(9), c(8), out(9);
    REQUIRE_THROWS_AS(
        laplacian_varcoef(std::span<const double>(u), std::span<const double>(c), g, out), Error);
}

TEST_CASE("coefficient adjoint agrees with finite differences") {
    const Grid g = build_grid(4, 3, 0.7);
    const auto n = static_cast<std::size_t>(g.n_cells());
    Rng rng(99);
    std::vector<double> u(n), c(n), w(n);
    for (auto& v : u) v = rng.uniform(-1.0, 1.0);
    for (auto& v : c) v = rng.uniform(0.5, 1.5);
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);

    std::vector<double> c_bar(n, 0.0);
    laplacian_varcoef_coeff_adjoint(u, w, g, c_bar);

    const auto objective = [&](const std::vector<double>& coeff) {
        const auto lap = laplacian_varcoef(u, coeff, g);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * lap[k];
        return acc;
    };
    for (std::size_t j = 0; j < n; ++j) {
        const double step = 1e-6;
        auto hi = c, lo = c;
        hi[j] += step;
        lo[j] -= step;
        const double fd = (objective(hi) - objective(lo)) / (2.0 * step);
        REQUIRE(c_bar[j] == Catch::Approx(fd).margin(1e-6));
    }
}

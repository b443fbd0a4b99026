#include <catch2/catch_amalgamated.hpp>

#include "epiforge/dense.hpp"
#include "epiforge/errors.hpp"

using namespace epiforge;

TEST_CASE("Matrix stores row-major with explicit shape") {
    Matrix a(2, 3, 1.5);
    REQUIRE(a.rows == 2);
    REQUIRE(a.cols == 3);
    REQUIRE(a.size() == 6);
    a(1, 2) = -4.0;
    REQUIRE(a.data[5] == -4.0);
    REQUIRE(a(0, 0) == 1.5);
}

TEST_CASE("matvec computes A x against a hand-worked example") {
    // A = [[1, 2, 3], [4, 5, 6]], x = [1, -1, 2] -> [5, 11]
    Matrix a(2, 3);
    a.data = {1, 2, 3, 4, 5, 6};
    std::vector<double> x = {1, -1, 2}, out(2);
    matvec(a, x, out);
    REQUIRE(out[0] == 5.0);
    REQUIRE(out[1] == 11.0);
}

TEST_CASE("matvec_transpose computes A^T x against a hand-worked example") {
    Matrix a(2, 3);
    a.data = {1, 2, 3, 4, 5, 6};
    std::vector<double> w = {2, -1}, out(3);
    matvec_transpose(a, w, out);
    // A^T w = [1*2-4, 2*2-5, 3*2-6] = [-2, -1, 0]
    REQUIRE(out[0] == -2.0);
    REQUIRE(out[1] == -1.0);
    REQUIRE(out[2] == 0.0);
}

TEST_CASE("outer_accumulate adds u v^T in place") {
    Matrix a(2, 2, 1.0);
    std::vector<double> u = {1, 2}, v = {3, 4};
    outer_accumulate(a, u, v);
    REQUIRE(a(0, 0) == 4.0);
    REQUIRE(a(0, 1) == 5.0);
    REQUIRE(a(1, 0) == 7.0);
    REQUIRE(a(1, 1) == 9.0);
}

TEST_CASE("dot matches a naive loop") {
    std::vector<double> a = {1, 2, 3}, b = {4, -5, 6};
    REQUIRE(dot(a, b) == 4.0 - 10.0 + 18.0);
}

TEST_CASE("dense kernels reject mismatched shapes") {
    Matrix a(2, 3);
    std::vector<double> bad(2), out2(2), out3(3);
    REQUIRE_THROWS_AS(matvec(a, bad, out2), Error);
    REQUIRE_THROWS_AS(matvec_transpose(a, out3, out3), Error);
    REQUIRE_THROWS_AS(outer_accumulate(a, out3, out3), Error);
    REQUIRE_THROWS_AS(dot(out2, out3), Error);
}

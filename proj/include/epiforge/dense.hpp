#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "epiforge/errors.hpp"

namespace epiforge {

/// Minimal row-major dense matrix. Enough linear algebra for the small
/// recurrent models in this toolkit; deliberately not a general library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }
};

/// out = A * x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> out) {
    if (x.size() != a.cols || out.size() != a.rows)
        raise(ErrorKind::DimensionMismatch, "matvec: matrix is " + std::to_string(a.rows) + "x" +
                                                std::to_string(a.cols) + ", vector length " +
                                                std::to_string(x.size()));
    for (std::size_t r = 0; r < a.rows; ++r) {
        double acc = 0.0;
        const double* row = a.data.data() + r * a.cols;
        for (std::size_t c = 0; c < a.cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

/// out = A^T * x
inline void matvec_transpose(const Matrix& a, std::span<const double> x, std::span<double> out) {
    if (x.size() != a.rows || out.size() != a.cols)
        raise(ErrorKind::DimensionMismatch, "matvec_transpose: matrix is " + std::to_string(a.rows) +
                                                "x" + std::to_string(a.cols) + ", vector length " +
                                                std::to_string(x.size()));
    for (std::size_t c = 0; c < a.cols; ++c) out[c] = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* row = a.data.data() + r * a.cols;
        const double xr = x[r];
        for (std::size_t c = 0; c < a.cols; ++c) out[c] += row[c] * xr;
    }
}

/// A += u * v^T
inline void outer_accumulate(Matrix& a, std::span<const double> u, std::span<const double> v) {
    if (u.size() != a.rows || v.size() != a.cols)
        raise(ErrorKind::DimensionMismatch, "outer_accumulate: shape mismatch");
    for (std::size_t r = 0; r < a.rows; ++r) {
        double* row = a.data.data() + r * a.cols;
        const double ur = u[r];
        for (std::size_t c = 0; c < a.cols; ++c) row[c] += ur * v[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        raise(ErrorKind::DimensionMismatch, "dot: vector lengths " + std::to_string(a.size()) +
                                                " and " + std::to_string(b.size()) + " differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace epiforge

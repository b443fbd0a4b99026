#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "epiforge/dense.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/seird.hpp"

namespace epiforge {

/// Right-hand side of dy/dt = f(t, y). Implementations must be deterministic
/// and side-effect free: repeated evaluation at identical (t, y) returns
/// identical output.
///
/// vjp computes w^T * df/dy, the adjoint product reverse-mode training needs.
/// Systems that are only ever simulated may leave it unimplemented.
class OdeSystem {
public:
    virtual ~OdeSystem() = default;

    virtual std::size_t dim() const = 0;
    virtual void eval(double t, std::span<const double> y, std::span<double> dydt) const = 0;

    virtual void vjp(double t, std::span<const double> y, std::span<const double> w,
                     std::span<double> out) const {
        (void)t;
        (void)y;
        (void)w;
        (void)out;
        raise(ErrorKind::NotSupported, "this OdeSystem does not provide an analytic vjp");
    }

    std::vector<double> eval(double t, std::span<const double> y) const {
        std::vector<double> dydt(dim());
        eval(t, y, dydt);
        return dydt;
    }

protected:
    void check_dim(std::span<const double> y) const {
        if (y.size() != dim())
            raise(ErrorKind::DimensionMismatch, "state length " + std::to_string(y.size()) +
                                                    " does not match system dimension " +
                                                    std::to_string(dim()));
    }
};

class ZeroSystem final : public OdeSystem {
public:
    explicit ZeroSystem(std::size_t n) : n_(n) {}
    std::size_t dim() const override { return n_; }
    void eval(double, std::span<const double> y, std::span<double> dydt) const override {
        check_dim(y);
        for (auto& v : dydt) v = 0.0;
    }
    void vjp(double, std::span<const double>, std::span<const double>,
             std::span<double> out) const override {
        for (auto& v : out) v = 0.0;
    }

private:
    std::size_t n_;
};

/// dy/dt = A y
class LinearSystem final : public OdeSystem {
public:
    explicit LinearSystem(Matrix a) : a_(std::move(a)) {
        if (a_.rows != a_.cols) raise(ErrorKind::DimensionMismatch, "LinearSystem needs a square matrix");
    }

    /// Diagonal system dy_k/dt = lambda_k y_k.
    static LinearSystem diagonal(const std::vector<double>& lambdas) {
        Matrix a(lambdas.size(), lambdas.size());
        for (std::size_t k = 0; k < lambdas.size(); ++k) a(k, k) = lambdas[k];
        return LinearSystem(std::move(a));
    }

    std::size_t dim() const override { return a_.rows; }
    void eval(double, std::span<const double> y, std::span<double> dydt) const override {
        check_dim(y);
        matvec(a_, y, dydt);
    }
    void vjp(double, std::span<const double>, std::span<const double> w,
             std::span<double> out) const override {
        matvec_transpose(a_, w, out);
    }

private:
    Matrix a_;
};

/// SEIRD reaction dynamics of a single well-mixed cell: the PDE with diffusion
/// dropped. State order is (s, e, i, r, d).
class Seird0dSystem final : public OdeSystem {
public:
    explicit Seird0dSystem(ParamSchedule schedule) : schedule_(std::move(schedule)) {}

    std::size_t dim() const override { return kCompartments; }

    void eval(double t, std::span<const double> y, std::span<double> dydt) const override {
        check_dim(y);
        const SeirdParams p = schedule_.at(t);
        const CellRates rates{p.phi_i, p.phi_e, p.alpha_inc, p.gamma_e, p.gamma_i, p.delta, p.allee};
        double d[kCompartments];
        detail::seird_reaction_cell(rates, y[0], y[1], y[2], y[3], d, 0);
        for (int c = 0; c < kCompartments; ++c) dydt[c] = d[c];
    }

    void vjp(double t, std::span<const double> y, std::span<const double> w,
             std::span<double> out) const override {
        check_dim(y);
        const SeirdParams p = schedule_.at(t);
        const CellRates rates{p.phi_i, p.phi_e, p.alpha_inc, p.gamma_e, p.gamma_i, p.delta, p.allee};
        double acc[kCompartments] = {0, 0, 0, 0, 0};
        double wv[kCompartments];
        for (int c = 0; c < kCompartments; ++c) wv[c] = w[c];
        detail::seird_reaction_vjp_cell(rates, y[0], y[1], y[2], y[3], wv, acc);
        for (int c = 0; c < kCompartments; ++c) out[c] = acc[c];
    }

    const ParamSchedule& schedule() const { return schedule_; }

private:
    ParamSchedule schedule_;
};

/// Full spatio-temporal SEIRD system on a grid. State is the compartment-major
/// flattening (all s cells, then e, i, r, d); dimension is 5 * n_cells.
class SeirdGridSystem final : public OdeSystem {
public:
    SeirdGridSystem(Grid grid, ParamSchedule schedule, SpatialParamFields spatial = {})
        : grid_(grid), schedule_(std::move(schedule)), spatial_(std::move(spatial)) {
        spatial_.check(static_cast<std::size_t>(grid_.n_cells()));
    }

    std::size_t dim() const override { return kCompartments * static_cast<std::size_t>(grid_.n_cells()); }

    void eval(double t, std::span<const double> y, std::span<double> dydt) const override {
        check_dim(y);
        const std::size_t n = static_cast<std::size_t>(grid_.n_cells());
        const CompartmentFields state = CompartmentFields::unflatten(y, n);
        const CompartmentFields ddt = seird_rhs(state, schedule_.at(t), grid_, &spatial_);
        for (int c = 0; c < kCompartments; ++c)
            std::copy(ddt.compartment(c).begin(), ddt.compartment(c).end(), dydt.begin() + c * n);
    }

    void vjp(double t, std::span<const double> y, std::span<const double> w,
             std::span<double> out) const override;

    const Grid& grid() const { return grid_; }
    const ParamSchedule& schedule() const { return schedule_; }

private:
    Grid grid_;
    ParamSchedule schedule_;
    SpatialParamFields spatial_;
};

inline void SeirdGridSystem::vjp(double t, std::span<const double> y, std::span<const double> w,
                                 std::span<double> out) const {
    check_dim(y);
    if (w.size() != dim() || out.size() != dim())
        raise(ErrorKind::DimensionMismatch, "vjp adjoint length mismatch");
    const std::size_t n = static_cast<std::size_t>(grid_.n_cells());
    const SeirdParams p = schedule_.at(t);

    for (auto& v : out) v = 0.0;

    // Reaction part, cell by cell.
    for (std::size_t k = 0; k < n; ++k) {
        const CellRates rates = detail::rates_at_cell(p, &spatial_, k);
        double wv[kCompartments], acc[kCompartments] = {0, 0, 0, 0, 0};
        for (int c = 0; c < kCompartments; ++c) wv[c] = w[c * n + k];
        detail::seird_reaction_vjp_cell(rates, y[k], y[n + k], y[2 * n + k], y[3 * n + k], wv, acc);
        for (int c = 0; c < kCompartments; ++c) out[c * n + k] += acc[c];
    }

    // Diffusion part. For each diffusive compartment u with coefficient field
    // c_u = n_p * nu_u: the u-dependence is self-adjoint (apply the operator to
    // the adjoint), and the coefficient dependence feeds back into every
    // living compartment through n_p.
    std::vector<double> n_p(n);
    for (std::size_t k = 0; k < n; ++k) n_p[k] = y[k] + y[n + k] + y[2 * n + k] + y[3 * n + k];

    std::vector<double> coeff(n), lap_w(n), c_bar(n), np_bar(n, 0.0);
    using NuField = std::vector<double> SpatialParamFields::*;
    const std::array<std::pair<int, NuField>, 4> diffusive = {{
        {0, &SpatialParamFields::nu_s},
        {1, &SpatialParamFields::nu_e},
        {2, &SpatialParamFields::nu_i},
        {3, &SpatialParamFields::nu_r},
    }};
    const std::array<double, 4> nu_scalar = {p.nu_s, p.nu_e, p.nu_i, p.nu_r};
    std::vector<double> nu_cell(n);
    for (const auto& [c, member] : diffusive) {
        const std::vector<double>& nu_field = spatial_.*member;
        for (std::size_t k = 0; k < n; ++k)
            nu_cell[k] = nu_field.empty() ? nu_scalar[c] : nu_field[k];
        for (std::size_t k = 0; k < n; ++k) coeff[k] = n_p[k] * nu_cell[k];

        const auto u = y.subspan(c * n, n);
        const auto wu = w.subspan(c * n, n);

        laplacian_varcoef(wu, coeff, grid_, lap_w);
        for (std::size_t k = 0; k < n; ++k) out[c * n + k] += lap_w[k];

        for (auto& v : c_bar) v = 0.0;
        laplacian_varcoef_coeff_adjoint(u, wu, grid_, c_bar);
        for (std::size_t k = 0; k < n; ++k) np_bar[k] += nu_cell[k] * c_bar[k];
    }
    for (int c = 0; c < 4; ++c)
        for (std::size_t k = 0; k < n; ++k) out[c * n + k] += np_bar[k];
}

/// Exact change of units: g(t, y') = f(t, scale * y') / scale. The Jacobian is
/// invariant under this rescaling, so vjp passes straight through.
class ScaledSystem final : public OdeSystem {
public:
    ScaledSystem(std::shared_ptr<const OdeSystem> inner, double scale)
        : inner_(std::move(inner)), scale_(scale) {
        if (!(scale_ > 0.0)) raise(ErrorKind::InvalidConfig, "scale must be positive");
    }

    std::size_t dim() const override { return inner_->dim(); }

    void eval(double t, std::span<const double> y, std::span<double> dydt) const override {
        std::vector<double> raw(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) raw[k] = scale_ * y[k];
        inner_->eval(t, raw, dydt);
        for (auto& v : dydt) v /= scale_;
    }

    void vjp(double t, std::span<const double> y, std::span<const double> w,
             std::span<double> out) const override {
        std::vector<double> raw(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) raw[k] = scale_ * y[k];
        inner_->vjp(t, raw, w, out);
    }

private:
    std::shared_ptr<const OdeSystem> inner_;
    double scale_;
};

/// Decorator counting eval calls; used to assert the constant per-step cost of
/// the learned integrator.
class CountingSystem final : public OdeSystem {
public:
    explicit CountingSystem(const OdeSystem& inner) : inner_(inner) {}

    std::size_t dim() const override { return inner_.dim(); }
    void eval(double t, std::span<const double> y, std::span<double> dydt) const override {
        ++eval_count_;
        inner_.eval(t, y, dydt);
    }
    void vjp(double t, std::span<const double> y, std::span<const double> w,
             std::span<double> out) const override {
        inner_.vjp(t, y, w, out);
    }

    long eval_count() const { return eval_count_; }
    void reset() { eval_count_ = 0; }

private:
    const OdeSystem& inner_;
    mutable long eval_count_ = 0;
};

} // namespace epiforge

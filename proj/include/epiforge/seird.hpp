#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epiforge/errors.hpp"
#include "epiforge/grid.hpp"

namespace epiforge {

inline constexpr int kCompartments = 5;
inline constexpr std::array<const char*, kCompartments> kCompartmentNames = {"s", "e", "i", "r", "d"};

/// Epidemiological and diffusion coefficients of the spatio-temporal SEIRD model.
/// Rates are per day; diffusion parameters are km^2 * persons^-1 * day^-1;
/// allee is the density threshold below which transmission is suppressed.
struct SeirdParams {
    double phi_i = 0.0;     // symptomatic -> susceptible transmission rate
    double phi_e = 0.0;     // asymptomatic -> susceptible transmission rate
    double alpha_inc = 0.0; // incubation rate
    double gamma_e = 0.0;   // asymptomatic recovery rate
    double gamma_i = 0.0;   // symptomatic recovery rate
    double delta = 0.0;     // mortality rate
    double nu_s = 0.0;
    double nu_e = 0.0;
    double nu_i = 0.0;
    double nu_r = 0.0;
    double allee = 0.0;

    void validate() const {
        const std::array<std::pair<const char*, double>, 11> fields = {{
            {"phi_i", phi_i},
            {"phi_e", phi_e},
            {"alpha_inc", alpha_inc},
            {"gamma_e", gamma_e},
            {"gamma_i", gamma_i},
            {"delta", delta},
            {"nu_s", nu_s},
            {"nu_e", nu_e},
            {"nu_i", nu_i},
            {"nu_r", nu_r},
            {"allee", allee},
        }};
        for (const auto& [name, v] : fields) {
            if (!std::isfinite(v) || v < 0.0)
                raise(ErrorKind::InvalidConfig,
                      std::string("parameter ") + name + " must be finite and >= 0, got " + std::to_string(v));
        }
    }

    double* field(const std::string& name) {
        if (name == "phi_i") return &phi_i;
        if (name == "phi_e") return &phi_e;
        if (name == "alpha_inc") return &alpha_inc;
        if (name == "gamma_e") return &gamma_e;
        if (name == "gamma_i") return &gamma_i;
        if (name == "delta") return &delta;
        if (name == "nu_s") return &nu_s;
        if (name == "nu_e") return &nu_e;
        if (name == "nu_i") return &nu_i;
        if (name == "nu_r") return &nu_r;
        if (name == "allee") return &allee;
        return nullptr;
    }
};

/// Piecewise-constant-in-time parameter set. An override at day d replaces one
/// coefficient from day d onward; the base set covers the whole horizon.
class ParamSchedule {
public:
    ParamSchedule() = default;
    explicit ParamSchedule(SeirdParams base) : base_(base) { base_.validate(); }

    void add_override(const std::string& field, double day, double value) {
        overrides_.push_back({day, field, value});
        std::stable_sort(overrides_.begin(), overrides_.end(),
                         [](const Override& a, const Override& b) { return a.day < b.day; });
        at(day).validate();
    }

    SeirdParams at(double t) const {
        SeirdParams p = base_;
        for (const Override& o : overrides_) {
            if (o.day > t) break;
            double* f = p.field(o.field);
            if (f) *f = o.value;
        }
        return p;
    }

    const SeirdParams& base() const { return base_; }
    bool has_overrides() const { return !overrides_.empty(); }

    struct Override {
        double day;
        std::string field;
        double value;
    };
    const std::vector<Override>& overrides() const { return overrides_; }

private:
    SeirdParams base_;
    std::vector<Override> overrides_;
};

/// The five density fields of one model state, persons/km^2 per cell.
struct CompartmentFields {
    std::vector<double> s, e, i, r, d;

    CompartmentFields() = default;
    explicit CompartmentFields(std::size_t n_cells)
        : s(n_cells, 0.0), e(n_cells, 0.0), i(n_cells, 0.0), r(n_cells, 0.0), d(n_cells, 0.0) {}

    std::size_t n_cells() const { return s.size(); }

    std::vector<double>& compartment(int c) {
        switch (c) {
            case 0: return s;
            case 1: return e;
            case 2: return i;
            case 3: return r;
            default: return d;
        }
    }
    const std::vector<double>& compartment(int c) const {
        return const_cast<CompartmentFields*>(this)->compartment(c);
    }

    void check_consistent() const {
        const std::size_t n = s.size();
        if (e.size() != n || i.size() != n || r.size() != n || d.size() != n)
            raise(ErrorKind::DimensionMismatch, "compartment arrays have differing lengths");
    }

    bool all_finite() const {
        for (int c = 0; c < kCompartments; ++c)
            for (double v : compartment(c))
                if (!std::isfinite(v)) return false;
        return true;
    }

    bool physical() const {
        for (int c = 0; c < kCompartments; ++c)
            for (double v : compartment(c))
                if (!std::isfinite(v) || v < 0.0) return false;
        return true;
    }

    /// n_p = s + e + i + r elementwise (living population density).
    std::vector<double> living_population() const {
        std::vector<double> n_p(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) n_p[k] = s[k] + e[k] + i[k] + r[k];
        return n_p;
    }

    /// Compartment-major flattening: all s cells, then e, i, r, d.
    std::vector<double> flatten() const {
        check_consistent();
        std::vector<double> y;
        y.reserve(kCompartments * s.size());
        for (int c = 0; c < kCompartments; ++c) {
            const auto& f = compartment(c);
            y.insert(y.end(), f.begin(), f.end());
        }
        return y;
    }

    static CompartmentFields unflatten(std::span<const double> y, std::size_t n_cells) {
        if (y.size() != kCompartments * n_cells)
            raise(ErrorKind::DimensionMismatch,
                  "flattened state length " + std::to_string(y.size()) + " does not equal 5*" +
                      std::to_string(n_cells));
        CompartmentFields f(n_cells);
        for (int c = 0; c < kCompartments; ++c)
            std::copy(y.begin() + c * n_cells, y.begin() + (c + 1) * n_cells, f.compartment(c).begin());
        return f;
    }
};

/// Per-cell reaction rates. Scalars broadcast when no spatial field is given.
struct CellRates {
    double phi_i, phi_e, alpha_inc, gamma_e, gamma_i, delta, allee;
};

namespace detail {

/// Reaction terms of one cell. dstate is (ds, de, di, dr, dd)/dt.
/// Throws NonPositivePopulation when a transmission term would be evaluated
/// with n_p <= 0.
inline void seird_reaction_cell(const CellRates& p, double s, double e, double i, double r,
                                double dstate[kCompartments], std::size_t cell_for_error) {
    const double n_p = s + e + i + r;
    double t_i = 0.0;
    double t_e = 0.0;
    const bool transmission = (s != 0.0) && (i != 0.0 || e != 0.0);
    if (transmission) {
        if (!(n_p > 0.0))
            raise(ErrorKind::NonPositivePopulation,
                  "transmission term evaluated with n_p <= 0 at cell " + std::to_string(cell_for_error));
        const double allee_factor = 1.0 - p.allee / n_p;
        t_i = p.phi_i * allee_factor * s * i;
        t_e = p.phi_e * allee_factor * s * e;
    }
    dstate[0] = -t_i - t_e;
    dstate[1] = t_i + t_e - (p.alpha_inc + p.gamma_e) * e;
    dstate[2] = p.alpha_inc * e - (p.gamma_i + p.delta) * i;
    dstate[3] = p.gamma_e * e + p.gamma_i * i;
    dstate[4] = p.delta * i;
}

/// Adjoint of seird_reaction_cell: accumulates w^T * d(reaction)/d(s,e,i,r,d)
/// into out[0..4]. w is the adjoint of (ds,de,di,dr,dd)/dt.
inline void seird_reaction_vjp_cell(const CellRates& p, double s, double e, double i, double r,
                                    const double w[kCompartments], double out[kCompartments]) {
    const double n_p = s + e + i + r;
    const bool transmission = (s != 0.0) && (i != 0.0 || e != 0.0);
    const double g_t = w[1] - w[0]; // transmission enters de positively, ds negatively
    if (transmission && g_t != 0.0) {
        const double allee_factor = 1.0 - p.allee / n_p;
        const double dfactor = p.allee / (n_p * n_p); // d(allee_factor)/d(any living compartment)
        const double common = (p.phi_i * s * i + p.phi_e * s * e) * dfactor;
        out[0] += g_t * (common + allee_factor * (p.phi_i * i + p.phi_e * e));
        out[1] += g_t * (common + allee_factor * p.phi_e * s);
        out[2] += g_t * (common + allee_factor * p.phi_i * s);
        out[3] += g_t * common;
    }
    out[1] += -(p.alpha_inc + p.gamma_e) * w[1] + p.alpha_inc * w[2] + p.gamma_e * w[3];
    out[2] += -(p.gamma_i + p.delta) * w[2] + p.gamma_i * w[3] + p.delta * w[4];
}

} // namespace detail

/// Optional per-cell parameter fields; any empty vector falls back to the
/// scheduled scalar value for that coefficient.
struct SpatialParamFields {
    std::vector<double> phi_i, phi_e, alpha_inc, gamma_e, gamma_i, delta, allee;
    std::vector<double> nu_s, nu_e, nu_i, nu_r;

    void check(std::size_t n_cells) const {
        const std::array<std::pair<const char*, const std::vector<double>*>, 11> fields = {{
            {"phi_i", &phi_i},
            {"phi_e", &phi_e},
            {"alpha_inc", &alpha_inc},
            {"gamma_e", &gamma_e},
            {"gamma_i", &gamma_i},
            {"delta", &delta},
            {"allee", &allee},
            {"nu_s", &nu_s},
            {"nu_e", &nu_e},
            {"nu_i", &nu_i},
            {"nu_r", &nu_r},
        }};
        for (const auto& [name, v] : fields)
            if (!v->empty() && v->size() != n_cells)
                raise(ErrorKind::DimensionMismatch,
                      std::string("per-cell field ") + name + " has length " + std::to_string(v->size()) +
                          ", expected " + std::to_string(n_cells));
    }
};

namespace detail {

inline double cell_value(const std::vector<double>& field, double scalar, std::size_t k) {
    return field.empty() ? scalar : field[k];
}

inline CellRates rates_at_cell(const SeirdParams& p, const SpatialParamFields* sp, std::size_t k) {
    if (!sp)
        return CellRates{p.phi_i, p.phi_e, p.alpha_inc, p.gamma_e, p.gamma_i, p.delta, p.allee};
    return CellRates{cell_value(sp->phi_i, p.phi_i, k),     cell_value(sp->phi_e, p.phi_e, k),
                     cell_value(sp->alpha_inc, p.alpha_inc, k), cell_value(sp->gamma_e, p.gamma_e, k),
                     cell_value(sp->gamma_i, p.gamma_i, k), cell_value(sp->delta, p.delta, k),
                     cell_value(sp->allee, p.allee, k)};
}

} // namespace detail

/// Semi-discrete right-hand side of the SEIRD reaction-diffusion system on a
/// grid: per-cell reaction terms plus conservative variable-coefficient
/// diffusion with coefficient n_p * nu per compartment (deceased do not move).
inline CompartmentFields seird_rhs(const CompartmentFields& state, const SeirdParams& params,
                                   const Grid& grid, const SpatialParamFields* spatial = nullptr) {
    state.check_consistent();
    const std::size_t n = static_cast<std::size_t>(grid.n_cells());
    if (state.n_cells() != n)
        raise(ErrorKind::DimensionMismatch, "state has " + std::to_string(state.n_cells()) +
                                                " cells, grid has " + std::to_string(n));
    if (spatial) spatial->check(n);

    CompartmentFields ddt(n);
    double dstate[kCompartments];
    for (std::size_t k = 0; k < n; ++k) {
        const CellRates rates = detail::rates_at_cell(params, spatial, k);
        detail::seird_reaction_cell(rates, state.s[k], state.e[k], state.i[k], state.r[k], dstate, k);
        ddt.s[k] = dstate[0];
        ddt.e[k] = dstate[1];
        ddt.i[k] = dstate[2];
        ddt.r[k] = dstate[3];
        ddt.d[k] = dstate[4];
    }

    const std::vector<double> n_p = state.living_population();
    std::vector<double> coeff(n), lap(n);
    using NuField = std::vector<double> SpatialParamFields::*;
    const std::array<std::pair<int, NuField>, 4> diffusive = {{
        {0, &SpatialParamFields::nu_s},
        {1, &SpatialParamFields::nu_e},
        {2, &SpatialParamFields::nu_i},
        {3, &SpatialParamFields::nu_r},
    }};
    const std::array<double, 4> nu_scalar = {params.nu_s, params.nu_e, params.nu_i, params.nu_r};
    for (const auto& [c, member] : diffusive) {
        const std::vector<double>* nu_field = spatial ? &(spatial->*member) : nullptr;
        for (std::size_t k = 0; k < n; ++k) {
            const double nu = (nu_field && !nu_field->empty()) ? (*nu_field)[k] : nu_scalar[c];
            coeff[k] = n_p[k] * nu;
        }
        laplacian_varcoef(state.compartment(c), coeff, grid, lap);
        auto& target = ddt.compartment(c);
        for (std::size_t k = 0; k < n; ++k) target[k] += lap[k];
    }
    return ddt;
}

} // namespace epiforge

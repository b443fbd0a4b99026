#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "epiforge/errors.hpp"
#include "epiforge/ode.hpp"

namespace epiforge {

struct Trajectory {
    std::vector<double> times;                // days, strictly increasing
    std::vector<std::vector<double>> states;  // one state per time

    std::size_t size() const { return times.size(); }
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace detail

/// Classical 4-stage Runge-Kutta update; local truncation error O(h^5).
inline std::vector<double> rk4_step(const OdeSystem& f, double t, std::span<const double> y, double h) {
    if (!(h > 0.0)) raise(ErrorKind::InvalidConfig, "rk4_step needs h > 0");
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), out(n);

    f.eval(t, y, k1);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
    f.eval(t + 0.5 * h, tmp, k2);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
    f.eval(t + 0.5 * h, tmp, k3);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * k3[j];
    f.eval(t + h, tmp, k4);

    for (std::size_t j = 0; j < n; ++j)
        out[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

    if (!detail::all_finite(k1) || !detail::all_finite(k2) || !detail::all_finite(k3) ||
        !detail::all_finite(k4) || !detail::all_finite(out))
        raise(ErrorKind::NonFiniteState, "rk4_step produced non-finite values at t = " + std::to_string(t));
    return out;
}

/// Implicit-Euler residual r = y_candidate - y_prev - h * f(t_next, y_candidate).
/// Zero exactly at the implicit-Euler solution for the step y_prev -> y_candidate.
inline std::vector<double> residual(const OdeSystem& f, double t_next, std::span<const double> y_candidate,
                                    std::span<const double> y_prev, double h) {
    if (y_candidate.size() != y_prev.size() || y_candidate.size() != f.dim())
        raise(ErrorKind::DimensionMismatch, "residual: state shapes disagree");
    std::vector<double> r(y_candidate.size());
    f.eval(t_next, y_candidate, r);
    for (std::size_t j = 0; j < r.size(); ++j)
        r[j] = y_candidate[j] - y_prev[j] - h * r[j];
    return r;
}

struct ImplicitEulerOptions {
    double tol = 1e-10;
    int max_iter = 100;
    std::size_t newton_dim_limit = 64; // dense Newton fallback only for small systems
};

namespace detail {

/// Solve A x = b in place by Gaussian elimination with partial pivoting.
/// A is n x n row-major and destroyed. Returns false on a singular pivot.
inline bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]);
        for (std::size_t row = col + 1; row < n; ++row) {
            const double v = std::abs(a[row * n + col]);
            if (v > best) {
                best = v;
                pivot = row;
            }
        }
        if (best < 1e-300) return false;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        const double d = a[col * n + col];
        for (std::size_t row = col + 1; row < n; ++row) {
            const double m = a[row * n + col] / d;
            if (m == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[row * n + j] -= m * a[col * n + j];
            b[row] -= m * b[col];
        }
    }
    for (std::size_t row = n; row-- > 0;) {
        double acc = b[row];
        for (std::size_t j = row + 1; j < n; ++j) acc -= a[row * n + j] * b[j];
        b[row] = acc / a[row * n + row];
    }
    return true;
}

} // namespace detail

/// Backward-Euler step: returns y' with ||y' - y - h f(t+h, y')||_inf <= tol.
///
/// Damped fixed-point iteration first; if it stalls, a finite-difference
/// Newton solve takes over (small systems only). This is the training and
/// verification oracle the learned integrator is measured against.
inline std::vector<double> implicit_euler_step(const OdeSystem& f, double t, std::span<const double> y,
                                               double h, const ImplicitEulerOptions& opts = {}) {
    if (!(h > 0.0)) raise(ErrorKind::InvalidConfig, "implicit_euler_step needs h > 0");
    if (!(opts.tol > 0.0)) raise(ErrorKind::InvalidConfig, "implicit_euler_step needs tol > 0");

    const std::size_t n = y.size();
    const double t_next = t + h;
    std::vector<double> cur(y.begin(), y.end());
    std::vector<double> r = residual(f, t_next, cur, y, h);
    double r_norm = detail::max_abs(r);
    if (r_norm <= opts.tol) return cur; // f vanished at y: zero iterations needed

    int iter = 0;
    double damping = 1.0;
    const int fp_budget = opts.max_iter / 2;
    std::vector<double> proposal(n), fval(n);
    while (iter < fp_budget && r_norm > opts.tol) {
        // Fixed-point map y <- y_prev + h f(t_next, y), damped toward the
        // current iterate when the full step makes the residual worse.
        f.eval(t_next, cur, fval);
        for (std::size_t j = 0; j < n; ++j) {
            const double target = y[j] + h * fval[j];
            proposal[j] = (1.0 - damping) * cur[j] + damping * target;
        }
        std::vector<double> r_new = residual(f, t_next, proposal, y, h);
        const double r_new_norm = detail::max_abs(r_new);
        ++iter;
        if (!std::isfinite(r_new_norm) || r_new_norm > r_norm) {
            damping *= 0.5;
            if (damping < 1.0 / 64.0) break; // hand over to Newton
            continue;
        }
        cur.swap(proposal);
        r = std::move(r_new);
        r_norm = r_new_norm;
    }

    if (r_norm > opts.tol && n <= opts.newton_dim_limit) {
        // Newton on g(y') = y' - y - h f(t_next, y'), finite-difference Jacobian.
        std::vector<double> jac(n * n), step(n), perturbed(n), f0(n), f1(n);
        while (iter < opts.max_iter && r_norm > opts.tol) {
            f.eval(t_next, cur, f0);
            for (std::size_t col = 0; col < n; ++col) {
                const double eps = 1e-7 * (1.0 + std::abs(cur[col]));
                perturbed.assign(cur.begin(), cur.end());
                perturbed[col] += eps;
                f.eval(t_next, perturbed, f1);
                for (std::size_t row = 0; row < n; ++row) {
                    const double dfd = (f1[row] - f0[row]) / eps;
                    jac[row * n + col] = (row == col ? 1.0 : 0.0) - h * dfd;
                }
            }
            step = r;
            if (!detail::solve_dense(jac, step, n)) break;
            for (std::size_t j = 0; j < n; ++j) cur[j] -= step[j];
            r = residual(f, t_next, cur, y, h);
            r_norm = detail::max_abs(r);
            ++iter;
            if (!std::isfinite(r_norm)) break;
        }
    }

    if (!(r_norm <= opts.tol))
        raise(ErrorKind::NoConvergence, "implicit_euler_step: residual norm " + std::to_string(r_norm) +
                                            " above tol " + std::to_string(opts.tol) + " after " +
                                            std::to_string(iter) + " iterations");
    return cur;
}

enum class StepMethod { rk4, implicit_euler };

/// Fixed-step integration producing times t0 + k*h for k = 0..n_steps.
inline Trajectory simulate(const OdeSystem& f, std::span<const double> y0, double t0, int n_steps,
                           double h, StepMethod method = StepMethod::rk4,
                           const ImplicitEulerOptions& ie_opts = {}) {
    if (!detail::all_finite(y0)) raise(ErrorKind::NonFiniteState, "simulate: initial state not finite");
    if (n_steps < 0) raise(ErrorKind::InvalidConfig, "simulate: n_steps must be >= 0");

    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.times.push_back(t0);
    traj.states.emplace_back(y0.begin(), y0.end());

    for (int k = 0; k < n_steps; ++k) {
        const double t = t0 + k * h;
        try {
            std::vector<double> next = (method == StepMethod::rk4)
                                           ? rk4_step(f, t, traj.states.back(), h)
                                           : implicit_euler_step(f, t, traj.states.back(), h, ie_opts);
            traj.states.push_back(std::move(next));
        } catch (const Error& err) {
            raise(err.kind(), "step " + std::to_string(k) + ": " + err.what());
        }
        traj.times.push_back(t0 + (k + 1) * h);
    }
    return traj;
}

} // namespace epiforge

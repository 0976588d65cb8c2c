#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "fields.hpp"

namespace holoflow {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.1;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<cvec> states;
    bool escaped = false;
    double escape_time = std::numeric_limits<double>::quiet_NaN();

    const cvec& endpoint() const { return states.back(); }
    double end_time() const { return times.back(); }
};

// Step size collapsed below 1e-14 without an escape verdict. Carries the
// trajectory prefix computed so far.
struct IntegratorStallError : Error {
    Trajectory prefix;
    IntegratorStallError(const std::string& what, Trajectory p)
        : Error(what), prefix(std::move(p)) {}
};

namespace detail {

// Dormand-Prince 5(4) tableau
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // fifth-order minus embedded fourth-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <class RHS>
struct Dopri5Step {
    cvec y_new;
    cvec k1_next;  // FSAL stage
    double err = 0.0;
};

template <class RHS>
Dopri5Step<RHS> dopri5_step(RHS& rhs, double t, const cvec& y, const cvec& k1, double h,
                            double rel_tol, double abs_tol) {
    using T = Dopri5;
    const std::size_t n = y.size();
    cvec tmp(n);

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * T::a21 * k1[i];
    const cvec k2 = rhs(t + T::c2 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    const cvec k3 = rhs(t + T::c3 * h, tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    const cvec k4 = rhs(t + T::c4 * h, tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    const cvec k5 = rhs(t + T::c5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                             T::a65 * k5[i]);
    const cvec k6 = rhs(t + h, tmp);

    Dopri5Step<RHS> out;
    out.y_new.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.y_new[i] = y[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] +
                                   T::b5 * k5[i] + T::b6 * k6[i]);
    out.k1_next = rhs(t + h, out.y_new);

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx ei = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] +
                             T::e6 * k6[i] + T::e7 * out.k1_next[i]);
        const double sc =
            abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(out.y_new[i]));
        const double r = std::abs(ei) / sc;
        acc += r * r;
    }
    out.err = std::sqrt(acc / static_cast<double>(n));
    return out;
}

// Outward radial speed at y: rate of change of the domain norm along f.
inline double outward_speed(const DomainModel& dom, const cvec& y, const cvec& f) {
    if (dom.kind != DomainKind::Polydisc) {
        const double n = norm2(y);
        if (n < 1e-300) return 0.0;
        return (dot(f, y)).real() / n;
    }
    const double n = norm_inf(y);
    if (n < 1e-300) return 0.0;
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::abs(y[i]) < n - 1e-12 * (1.0 + n)) continue;
        v = std::max(v, (f[i] * std::conj(y[i])).real() / std::abs(y[i]));
    }
    return v;
}

inline double escape_speed_threshold(const DomainModel& dom) {
    return std::max(1e3 * dom.boundary_margin, 1e-6);
}

// Keep states representable strictly inside the closed unit ball/polydisc.
inline void clamp_inside(const DomainModel& dom, cvec& y) {
    int guard = 0;
    while (dom.norm(y) >= 1.0 && guard++ < 64) {
        for (cplx& c : y) c *= (1.0 - 3e-16);
    }
}

inline double shrink_near_boundary(const DomainModel& dom, const cvec& y, double max_step) {
    const double n = dom.norm(y);
    if (n <= 0.9) return max_step;
    return max_step * std::max(1.0 - n, 1e-2);
}

}  // namespace detail

// Adaptive embedded Runge-Kutta 5(4) over [t0, t1] with boundary-aware step
// caps and escape detection. Trajectory nodes are the accepted steps. A
// state that reaches the escape shell with outward radial speed above the
// recovery threshold is declared escaped and the crossing time is bisected
// to 1e-8; slow drift into the shell is integrated through, so orbits that
// merely converge to the boundary are not mistaken for escapes.
template <class RHS>
Trajectory integrate_ode(const DomainModel& dom, RHS&& rhs, const cvec& z0, double t0, double t1,
                         const IntegratorConfig& cfg = {}) {
    if (!(t1 >= t0)) throw PreconditionError("integrate_ode: t1 must be >= t0");

    Trajectory traj;
    traj.times.push_back(t0);
    traj.states.push_back(z0);
    if (t1 == t0) return traj;

    double t = t0;
    cvec y = z0;
    cvec k1 = rhs(t, y);

    const double vout_threshold = detail::escape_speed_threshold(dom);
    double h = std::min(detail::shrink_near_boundary(dom, y, cfg.max_step), t1 - t0);
    {
        const double fn = norm2(k1);
        if (fn > 1e-8) h = std::min(h, 0.01 * (1.0 + norm2(y)) / fn);
    }

    long long steps = 0;
    const long long step_cap = 20000000;
    while (t < t1) {
        if (h < 1e-14)
            throw IntegratorStallError(
                "integrate_ode: step size collapsed below 1e-14 at t = " + std::to_string(t),
                std::move(traj));
        if (++steps > step_cap)
            throw IntegratorStallError("integrate_ode: step budget exhausted at t = " +
                                           std::to_string(t),
                                       std::move(traj));
        const double h_cap = detail::shrink_near_boundary(dom, y, cfg.max_step);
        h = std::min({h, h_cap, t1 - t});

        auto step = detail::dopri5_step(rhs, t, y, k1, h, cfg.rel_tol, cfg.abs_tol);
        if (step.err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(step.err, -0.2));
            continue;
        }

        cvec y_new = std::move(step.y_new);
        const double t_new = t + h;
        detail::clamp_inside(dom, y_new);

        if (dom.in_escape_shell(y_new)) {
            const cvec f_new = rhs(t_new, y_new);
            if (detail::outward_speed(dom, y_new, f_new) > vout_threshold) {
                double esc_t = t;
                cvec esc_y = y_new;
                if (!dom.in_escape_shell(y)) {
                    // bisect the crossing of the shell inside this step
                    double lo = 0.0, hi = h;
                    cvec hi_state = y_new;
                    while (hi - lo > 1e-9) {
                        const double mid = 0.5 * (lo + hi);
                        auto probe =
                            detail::dopri5_step(rhs, t, y, k1, mid, cfg.rel_tol, cfg.abs_tol);
                        if (dom.in_escape_shell(probe.y_new)) {
                            hi = mid;
                            hi_state = std::move(probe.y_new);
                        } else {
                            lo = mid;
                        }
                    }
                    esc_t = t + hi;
                    esc_y = hi_state;
                    detail::clamp_inside(dom, esc_y);
                }
                traj.times.push_back(esc_t);
                traj.states.push_back(esc_y);
                traj.escaped = true;
                traj.escape_time = esc_t;
                return traj;
            }
        }

        t = t_new;
        y = std::move(y_new);
        k1 = (dom.norm(y) >= 1.0 - 1e-15) ? rhs(t, y) : std::move(step.k1_next);
        traj.times.push_back(t);
        traj.states.push_back(y);
        const double grow = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(step.err, 1e-10), -0.2)));
        h = std::min(h * grow, detail::shrink_near_boundary(dom, y, cfg.max_step));
    }
    return traj;
}

// Flow of an autonomous field from an interior starting point over [0, t_end].
inline Trajectory integrate_autonomous(const DomainModel& dom, const HolomorphicField& field,
                                       const cvec& z0, double t_end,
                                       const IntegratorConfig& cfg = {}) {
    if (field.dim() != dom.dim)
        throw PreconditionError("integrate_autonomous: field and domain dimensions differ");
    dom.require_inside(z0, "integrate_autonomous");
    if (!(t_end >= 0.0)) throw PreconditionError("integrate_autonomous: t_end must be >= 0");
    auto rhs = [&field](double, const cvec& z) { return field.eval(z); };
    return integrate_ode(dom, rhs, z0, 0.0, t_end, cfg);
}

}  // namespace holoflow

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cvec.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace holoflow {

enum class DomainKind { UnitDisc, UnitBall, Polydisc };

inline const char* domain_kind_name(DomainKind k) {
    switch (k) {
        case DomainKind::UnitDisc: return "disc";
        case DomainKind::UnitBall: return "ball";
        default: return "polydisc";
    }
}

// One of the three model domains: the unit disc in C, the Euclidean unit
// ball in C^q, or the unit polydisc in C^q (max norm). boundary_margin sets
// the shell where trajectories are checked for escape.
struct DomainModel {
    DomainKind kind = DomainKind::UnitDisc;
    int dim = 1;
    double boundary_margin = 1e-9;

    static DomainModel disc(double margin = 1e-9) {
        return validated({DomainKind::UnitDisc, 1, margin});
    }
    static DomainModel ball(int q, double margin = 1e-9) {
        return validated({DomainKind::UnitBall, q, margin});
    }
    static DomainModel polydisc(int q, double margin = 1e-9) {
        return validated({DomainKind::Polydisc, q, margin});
    }

    static DomainModel validated(DomainModel m) {
        if (m.dim < 1) throw PreconditionError("domain dimension must be at least 1");
        if (m.kind == DomainKind::UnitDisc && m.dim != 1)
            throw PreconditionError("the unit disc is one dimensional");
        if (!(m.boundary_margin > 0.0) || m.boundary_margin > 0.1)
            throw PreconditionError("boundary_margin must lie in (0, 0.1]");
        return m;
    }

    // Euclidean norm for disc/ball, max coordinate modulus for the polydisc.
    double norm(const cvec& z) const {
        return kind == DomainKind::Polydisc ? norm_inf(z) : norm2(z);
    }

    bool contains(const cvec& z) const {
        return static_cast<int>(z.size()) == dim && norm(z) < 1.0;
    }

    bool in_escape_shell(const cvec& z) const { return norm(z) >= 1.0 - boundary_margin; }

    void require_inside(const cvec& z, const char* what) const {
        if (static_cast<int>(z.size()) != dim)
            throw DomainViolationError(std::string(what) + ": point dimension mismatch", z);
        if (!(norm(z) < 1.0))
            throw DomainViolationError(std::string(what) + ": point lies outside the domain", z);
    }

    // Uniform sample in the closed sub-ball of given radius (volume measure;
    // per-coordinate for the polydisc).
    cvec sample_inside(Rng& rng, double radius) const {
        return kind == DomainKind::Polydisc ? rng.in_polydisc(dim, radius)
                                            : rng.in_ball(dim, radius);
    }
};

namespace detail {

// Squared pseudo-hyperbolic distance on the ball, written to avoid the
// 1 - A*B/C cancellation for nearby points:
//   s^2 = (|z-w|^2 - (|z|^2 |w|^2 - |<z,w>|^2)) / |1-<z,w>|^2.
// The Gram term is expanded by the Lagrange identity into a sum of squares
// so its error scales with |z-w| instead of flooring at eps * |z|^4.
inline double ball_pseudo_sq(const cvec& z, const cvec& w) {
    const cplx g = cplx(1.0, 0.0) - dot(z, w);
    const double C = std::norm(g);
    double gram = 0.0;
    for (std::size_t i = 0; i + 1 < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j)
            gram += std::norm(z[i] * w[j] - z[j] * w[i]);
    const double D = dist2(z, w) * dist2(z, w) - gram;
    if (D <= 0.0) return 0.0;
    return D / C;
}

inline double disc_distance_1d(cplx z, cplx w) {
    const cplx num = z - w;
    const cplx den = cplx(1.0, 0.0) - std::conj(w) * z;
    double s = std::abs(num) / std::abs(den);
    s = std::min(s, 1.0 - 1e-16);
    return std::atanh(s);
}

}  // namespace detail

// Kobayashi distance between interior points, normalized so that
// k(0, r e_1) = arctanh r. Disc and ball use the Mobius-invariant closed
// form; the polydisc is the max over coordinate disc distances.
inline double kobayashi_distance(const DomainModel& dom, const cvec& z, const cvec& w) {
    dom.require_inside(z, "kobayashi_distance");
    dom.require_inside(w, "kobayashi_distance");
    if (z == w) return 0.0;
    if (dom.kind == DomainKind::Polydisc) {
        double m = 0.0;
        for (int i = 0; i < dom.dim; ++i) {
            m = std::max(m, detail::disc_distance_1d(z[static_cast<std::size_t>(i)],
                                                     w[static_cast<std::size_t>(i)]));
        }
        return m;
    }
    double s = std::sqrt(detail::ball_pseudo_sq(z, w));
    s = std::min(s, 1.0 - 1e-16);
    return std::atanh(s);
}

struct DiniResult {
    double value = 0.0;
    // true when the polydisc maximum is attained by more than one coordinate,
    // i.e. the distance is not smooth at (z,w) and `value` is the one-sided
    // derivative.
    bool tie_locus = false;
};

namespace detail {

// Forward derivative of the smooth ball/disc distance at distinct points:
// with A = 1-|z|^2, B = 1-|w|^2, g = 1-<z,w>, s the pseudo-hyperbolic
// distance,
//   dk = -(dA/A + dB/B - dC/C) / (2s).
inline double ball_dini(const cvec& z, const cvec& w, const cvec& u, const cvec& v) {
    const double A = 1.0 - norm2_sq(z);
    const double B = 1.0 - norm2_sq(w);
    const cplx g = cplx(1.0, 0.0) - dot(z, w);
    const double C = std::norm(g);
    const double s = std::sqrt(ball_pseudo_sq(z, w));
    const double dA = -2.0 * (dot(u, z)).real();
    const double dB = -2.0 * (dot(v, w)).real();
    const cplx delta = dot(u, w) + dot(z, v);
    const double dC = -2.0 * (std::conj(g) * delta).real();
    return -(dA / A + dB / B - dC / C) / (2.0 * s);
}

}  // namespace detail

// Forward directional derivative of t |-> k(z + t u, w + t v) at t = 0+.
// Closed form everywhere the distance is smooth; on the polydisc tie locus
// the one-sided derivative is the max over the tied coordinates and the
// result is flagged.
inline DiniResult dini_directional_derivative(const DomainModel& dom, const cvec& z,
                                              const cvec& w, const cvec& u, const cvec& v) {
    dom.require_inside(z, "dini_directional_derivative");
    dom.require_inside(w, "dini_directional_derivative");
    if (static_cast<int>(u.size()) != dom.dim || static_cast<int>(v.size()) != dom.dim)
        throw PreconditionError("dini_directional_derivative: direction dimension mismatch");
    if (dist2(z, w) <= 1e-12)
        throw DegeneratePairError("dini_directional_derivative: z and w coincide to tolerance");

    if (dom.kind != DomainKind::Polydisc) {
        return {detail::ball_dini(z, w, u, v), false};
    }

    std::vector<double> ks(static_cast<std::size_t>(dom.dim));
    double kmax = 0.0;
    for (int i = 0; i < dom.dim; ++i) {
        ks[static_cast<std::size_t>(i)] = detail::disc_distance_1d(
            z[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i)]);
        kmax = std::max(kmax, ks[static_cast<std::size_t>(i)]);
    }
    const double tie_tol = 1e-12 * (1.0 + kmax);
    double best = -std::numeric_limits<double>::infinity();
    int tied = 0;
    for (int i = 0; i < dom.dim; ++i) {
        if (kmax - ks[static_cast<std::size_t>(i)] > tie_tol) continue;
        ++tied;
        const std::size_t k = static_cast<std::size_t>(i);
        best = std::max(best, detail::ball_dini(cvec1(z[k]), cvec1(w[k]), cvec1(u[k]),
                                                cvec1(v[k])));
    }
    return {best, tied > 1};
}

// Difference-quotient version of the forward derivative: minimum of
// Richardson-extrapolated forward quotients over a decreasing h ladder.
// Slower and noisier than the closed form; kept as an independent check and
// as the fallback at points the closed form does not cover.
inline double dini_forward_difference(const DomainModel& dom, const cvec& z, const cvec& w,
                                      const cvec& u, const cvec& v) {
    dom.require_inside(z, "dini_forward_difference");
    dom.require_inside(w, "dini_forward_difference");
    if (dist2(z, w) <= 1e-12)
        throw DegeneratePairError("dini_forward_difference: z and w coincide to tolerance");

    const double k0 = kobayashi_distance(dom, z, w);
    std::vector<double> quotients;
    quotients.reserve(21);
    double h = 1e-2;
    for (int k = 0; k <= 20; ++k, h *= 0.5) {
        const cvec zh = axpy(z, h, u);
        const cvec wh = axpy(w, h, v);
        if (!dom.contains(zh) || !dom.contains(wh)) {
            quotients.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        quotients.push_back((kobayashi_distance(dom, zh, wh) - k0) / h);
    }

    // first-order Richardson on the halving pair whose step is nearest the
    // sweet spot where truncation and roundoff balance
    const double h_target = 3e-6;
    double best = std::numeric_limits<double>::infinity();
    double best_gap = std::numeric_limits<double>::infinity();
    bool any = false;
    double hk = 1e-2;
    for (std::size_t k = 0; k + 1 < quotients.size(); ++k, hk *= 0.5) {
        if (std::isnan(quotients[k]) || std::isnan(quotients[k + 1])) continue;
        const double gap = std::abs(std::log(0.5 * hk) - std::log(h_target));
        if (gap < best_gap) {
            best_gap = gap;
            best = 2.0 * quotients[k + 1] - quotients[k];
        }
        any = true;
    }
    if (!any) {
        // no adjacent valid pair: settle for the smallest-step raw quotient
        for (double q : quotients) {
            if (!std::isnan(q)) {
                best = q;
                any = true;
            }
        }
    }
    if (!any)
        throw StepSizeError(
            "dini_forward_difference: every ladder step left the domain; directions point "
            "outward from a near-boundary pair");
    return best;
}

struct LipschitzEstimate {
    double compact_radius = 0.0;
    double constant = 0.0;   // 1 / (1 - r^2)
    int samples = 0;
    double worst_ratio = 0.0;
    bool verified = false;
};

// Lipschitz constant of the distance w.r.t. Euclidean endpoint motion on the
// closed sub-ball of radius r: the infinitesimal metric density is bounded
// there by 1/(1-r^2) on all three domains. The returned certificate records
// the sampled worst difference quotient against that constant.
inline LipschitzEstimate lipschitz_certificate(const DomainModel& dom, double compact_radius,
                                               int samples, std::uint64_t seed) {
    if (!(compact_radius > 0.0 && compact_radius < 1.0))
        throw InvalidCompactError("lipschitz_certificate: compact radius must lie in (0,1)");
    if (samples < 1) throw PreconditionError("lipschitz_certificate: samples must be positive");

    const double C = 1.0 / (1.0 - compact_radius * compact_radius);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const cvec z = dom.sample_inside(rng, compact_radius);
        const cvec w = dom.sample_inside(rng, compact_radius);
        const cvec z2 = dom.sample_inside(rng, compact_radius);
        const cvec w2 = dom.sample_inside(rng, compact_radius);
        const double denom = dist2(z, z2) + dist2(w, w2);
        if (denom < 1e-15) continue;
        const double diff =
            std::abs(kobayashi_distance(dom, z, w) - kobayashi_distance(dom, z2, w2));
        worst = std::max(worst, diff / denom);
    }
    return {compact_radius, C, samples, worst, worst <= C + 1e-12};
}

}  // namespace holoflow

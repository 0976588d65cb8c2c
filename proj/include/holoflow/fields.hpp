#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace holoflow {

// H(z) = A z
struct LinearField {
    CMat A;
};

struct Monomial {
    std::vector<int> powers;  // one exponent per coordinate
    cplx coeff{0.0, 0.0};
};

struct PolynomialField {
    int dim = 1;
    // components[i] holds the monomials of the i-th coordinate function
    std::vector<std::vector<Monomial>> components;
};

// One-variable rational function, coefficients in ascending degree.
// An empty or omitted denominator means 1.
struct RationalPoly {
    std::vector<cplx> num{cplx(0.0, 0.0)};
    std::vector<cplx> den{cplx(1.0, 0.0)};

    cplx eval(cplx z) const {
        cplx n(0.0, 0.0), d(0.0, 0.0);
        for (std::size_t i = num.size(); i-- > 0;) n = n * z + num[i];
        if (den.empty()) return n;
        for (std::size_t i = den.size(); i-- > 0;) d = d * z + den[i];
        return n / d;
    }
};

// H(z) = (tau - z)(1 - conj(tau) z) p(z) on the disc, with Re p >= 0.
struct BerksonPortaField {
    cplx tau{0.0, 0.0};
    RationalPoly p;
};

struct HolomorphicField {
    std::variant<LinearField, PolynomialField, BerksonPortaField> rep;

    int dim() const {
        if (const auto* lin = std::get_if<LinearField>(&rep)) return lin->A.n;
        if (const auto* pol = std::get_if<PolynomialField>(&rep)) return pol->dim;
        return 1;
    }

    // Raw evaluation, no domain membership check. The checked entry point is
    // evaluate() below.
    cvec eval(const cvec& z) const {
        if (const auto* lin = std::get_if<LinearField>(&rep)) return matvec(lin->A, z);
        if (const auto* pol = std::get_if<PolynomialField>(&rep)) {
            cvec r = cvec_zero(z.size());
            for (int i = 0; i < pol->dim; ++i) {
                cplx acc(0.0, 0.0);
                for (const Monomial& m : pol->components[static_cast<std::size_t>(i)]) {
                    cplx term = m.coeff;
                    for (int j = 0; j < pol->dim; ++j) {
                        for (int p = 0; p < m.powers[static_cast<std::size_t>(j)]; ++p)
                            term *= z[static_cast<std::size_t>(j)];
                    }
                    acc += term;
                }
                r[static_cast<std::size_t>(i)] = acc;
            }
            return r;
        }
        const auto& bp = std::get<BerksonPortaField>(rep);
        const cplx zz = z[0];
        return cvec1((bp.tau - zz) * (cplx(1.0, 0.0) - std::conj(bp.tau) * zz) * bp.p.eval(zz));
    }
};

inline HolomorphicField linear_field(CMat A) {
    if (A.n < 1) throw InvalidFieldError("linear_field: empty matrix");
    return {LinearField{std::move(A)}};
}

inline HolomorphicField polynomial_field(PolynomialField p) {
    if (p.dim < 1 || static_cast<int>(p.components.size()) != p.dim)
        throw InvalidFieldError("polynomial_field: component count must equal dim");
    for (const auto& comp : p.components)
        for (const Monomial& m : comp)
            if (static_cast<int>(m.powers.size()) != p.dim)
                throw InvalidFieldError("polynomial_field: monomial exponent count must equal dim");
    return {std::move(p)};
}

// One-variable polynomial field from ascending coefficients.
inline HolomorphicField poly1(const std::vector<cplx>& coeffs) {
    PolynomialField p;
    p.dim = 1;
    p.components.resize(1);
    for (std::size_t d = 0; d < coeffs.size(); ++d) {
        if (coeffs[d] == cplx(0.0, 0.0)) continue;
        p.components[0].push_back(Monomial{{static_cast<int>(d)}, coeffs[d]});
    }
    return polynomial_field(std::move(p));
}

struct HerglotzNumeratorCheck {
    bool pass = false;
    double min_real = 0.0;
    cplx witness{0.0, 0.0};
};

// Samples Re p on circles of radius 0.9, 0.99, 0.999 plus the origin and
// checks Re p >= -1e-12 everywhere. A failure witness is the sampled point
// with the most negative real part.
inline HerglotzNumeratorCheck check_herglotz_numerator(const RationalPoly& p, int samples) {
    if (samples < 1) throw PreconditionError("check_herglotz_numerator: samples must be positive");
    HerglotzNumeratorCheck out;
    out.min_real = p.eval(cplx(0.0, 0.0)).real();
    out.witness = cplx(0.0, 0.0);
    for (double r : {0.9, 0.99, 0.999}) {
        for (int j = 0; j < samples; ++j) {
            const double th = 2.0 * std::numbers::pi * j / samples;
            const cplx z = r * cplx(std::cos(th), std::sin(th));
            const double re = p.eval(z).real();
            if (std::isnan(re) || re < out.min_real) {
                out.min_real = std::isnan(re) ? -std::numeric_limits<double>::infinity() : re;
                out.witness = z;
                if (std::isnan(re)) break;
            }
        }
    }
    out.pass = out.min_real >= -1e-12;
    return out;
}

// Checked constructor: |tau| <= 1 and the numerator passes the boundary
// positivity sweep.
inline HolomorphicField berkson_porta(cplx tau, RationalPoly p, int check_samples = 256) {
    if (std::abs(tau) > 1.0 + 1e-12)
        throw InvalidFieldError("berkson_porta: tau must lie in the closed unit disc");
    const auto chk = check_herglotz_numerator(p, check_samples);
    if (!chk.pass)
        throw InvalidFieldError("berkson_porta: numerator has negative real part near the boundary");
    return {BerksonPortaField{tau, std::move(p)}};
}

// Checked evaluation of a field at an interior point of its domain.
inline cvec evaluate(const DomainModel& dom, const HolomorphicField& field, const cvec& z) {
    if (field.dim() != dom.dim)
        throw PreconditionError("evaluate: field and domain dimensions differ");
    dom.require_inside(z, "evaluate");
    return field.eval(z);
}

namespace detail {

inline std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> r(a.size() + b.size() - 1, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

inline void poly_trim(std::vector<cplx>& c) {
    double scale = 0.0;
    for (const cplx& x : c) scale = std::max(scale, std::abs(x));
    while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * scale) c.pop_back();
}

// Long division num / den; returns the quotient when the remainder vanishes
// to relative tolerance, nothing otherwise.
inline std::optional<std::vector<cplx>> poly_exact_divide(std::vector<cplx> num,
                                                          std::vector<cplx> den) {
    poly_trim(num);
    poly_trim(den);
    if (den.size() == 1) {
        if (den[0] == cplx(0.0, 0.0)) return std::nullopt;
        for (cplx& c : num) c /= den[0];
        return num;
    }
    if (num.size() < den.size()) return std::nullopt;
    double num_scale = 0.0;
    for (const cplx& x : num) num_scale = std::max(num_scale, std::abs(x));
    std::vector<cplx> q(num.size() - den.size() + 1, cplx(0.0, 0.0));
    std::vector<cplx> r = num;
    for (std::size_t k = q.size(); k-- > 0;) {
        const cplx c = r[k + den.size() - 1] / den.back();
        q[k] = c;
        for (std::size_t j = 0; j < den.size(); ++j) r[k + j] -= c * den[j];
    }
    for (std::size_t j = 0; j + 1 < den.size(); ++j)
        if (std::abs(r[j]) > 1e-12 * (num_scale + 1e-300)) return std::nullopt;
    return q;
}

}  // namespace detail

// Expands a field into the polynomial representation when one exists.
// Berkson-Porta fields qualify only when the numerator denominator is
// constant.
inline PolynomialField to_polynomial(const HolomorphicField& field) {
    if (const auto* pol = std::get_if<PolynomialField>(&field.rep)) return *pol;
    if (const auto* lin = std::get_if<LinearField>(&field.rep)) {
        PolynomialField p;
        p.dim = lin->A.n;
        p.components.resize(static_cast<std::size_t>(p.dim));
        for (int i = 0; i < p.dim; ++i) {
            for (int j = 0; j < p.dim; ++j) {
                if (lin->A(i, j) == cplx(0.0, 0.0)) continue;
                std::vector<int> pw(static_cast<std::size_t>(p.dim), 0);
                pw[static_cast<std::size_t>(j)] = 1;
                p.components[static_cast<std::size_t>(i)].push_back(
                    Monomial{std::move(pw), lin->A(i, j)});
            }
        }
        return p;
    }
    const auto& bp = std::get<BerksonPortaField>(field.rep);
    // (tau - z)(1 - conj(tau) z) * num(z) / den(z), when den divides exactly
    std::vector<cplx> front{bp.tau, cplx(-1.0, 0.0)};
    std::vector<cplx> back{cplx(1.0, 0.0), -std::conj(bp.tau)};
    const std::vector<cplx> whole = detail::poly_mul(detail::poly_mul(front, back), bp.p.num);
    const std::vector<cplx> den = bp.p.den.empty() ? std::vector<cplx>{cplx(1.0, 0.0)} : bp.p.den;
    auto divided = detail::poly_exact_divide(whole, den);
    if (!divided)
        throw InvalidFieldError(
            "to_polynomial: field has a genuinely rational factor and no polynomial expansion");
    std::vector<cplx> coeffs = std::move(*divided);
    PolynomialField p;
    p.dim = 1;
    p.components.resize(1);
    for (std::size_t d = 0; d < coeffs.size(); ++d)
        if (coeffs[d] != cplx(0.0, 0.0))
            p.components[0].push_back(Monomial{{static_cast<int>(d)}, coeffs[d]});
    return p;
}

// Nonnegative combination of generators. The result is returned in expanded
// polynomial form; all-zero weights give the zero field.
inline HolomorphicField cone_combine(const std::vector<HolomorphicField>& fields,
                                     const std::vector<double>& weights) {
    if (fields.empty()) throw PreconditionError("cone_combine: no fields given");
    if (fields.size() != weights.size())
        throw PreconditionError("cone_combine: field and weight counts differ");
    const int q = fields[0].dim();
    for (const auto& f : fields)
        if (f.dim() != q) throw PreconditionError("cone_combine: mixed field dimensions");
    for (double w : weights)
        if (!(w >= 0.0)) throw InvalidWeightError("cone_combine: weights must be nonnegative");

    std::vector<std::map<std::vector<int>, cplx>> acc(static_cast<std::size_t>(q));
    for (std::size_t f = 0; f < fields.size(); ++f) {
        if (weights[f] == 0.0) continue;
        const PolynomialField p = to_polynomial(fields[f]);
        for (int i = 0; i < q; ++i)
            for (const Monomial& m : p.components[static_cast<std::size_t>(i)])
                acc[static_cast<std::size_t>(i)][m.powers] += weights[f] * m.coeff;
    }
    PolynomialField out;
    out.dim = q;
    out.components.resize(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i)
        for (const auto& [pw, c] : acc[static_cast<std::size_t>(i)])
            if (c != cplx(0.0, 0.0))
                out.components[static_cast<std::size_t>(i)].push_back(Monomial{pw, c});
    return {std::move(out)};
}

namespace detail {

inline double abs_rayleigh(const CMat& T, const cvec& v) { return std::abs(dot(matvec(T, v), v)); }

}  // namespace detail

// Numerical radius V(T) = sup over unit vectors of |<T v, v>|, estimated by
// coordinate directions plus random sampling plus a local ascent with
// shrinking steps. Deterministic for fixed seed.
inline double numerical_radius(const CMat& T, int samples = 4096,
                               std::uint64_t seed = 0x564f1dULL) {
    const int q = T.n;
    Rng rng(seed, 7701);
    cvec best_v(static_cast<std::size_t>(q), cplx(0.0, 0.0));
    best_v[0] = 1.0;
    double best = detail::abs_rayleigh(T, best_v);
    for (int i = 1; i < q; ++i) {
        cvec e(static_cast<std::size_t>(q), cplx(0.0, 0.0));
        e[static_cast<std::size_t>(i)] = 1.0;
        const double val = detail::abs_rayleigh(T, e);
        if (val > best) {
            best = val;
            best_v = e;
        }
    }
    for (int i = 0; i < samples; ++i) {
        const cvec v = rng.unit_vector(q);
        const double val = detail::abs_rayleigh(T, v);
        if (val > best) {
            best = val;
            best_v = v;
        }
    }
    double step = 0.1;
    while (step > 1e-8) {
        bool improved = false;
        for (int t = 0; t < 8; ++t) {
            cvec cand = best_v + step * rng.unit_vector(q);
            cand = (1.0 / norm2(cand)) * cand;
            const double val = detail::abs_rayleigh(T, cand);
            if (val > best) {
                best = val;
                best_v = cand;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

struct LinearPartAnalysis {
    cvec value_at_zero;
    CMat jacobian;
    double numerical_radius = 0.0;
};

// Value and derivative of the field at the origin together with the
// numerical radius of the derivative. Linear and polynomial fields give the
// derivative exactly from coefficients; other kinds use fourth-order central
// differences with step 1e-4.
inline LinearPartAnalysis analyze_linear_part(const HolomorphicField& field,
                                              int radius_samples = 4096,
                                              std::uint64_t seed = 0x564f1dULL) {
    const int q = field.dim();
    LinearPartAnalysis out;
    out.value_at_zero = field.eval(cvec_zero(static_cast<std::size_t>(q)));
    out.jacobian = CMat(q);

    if (const auto* lin = std::get_if<LinearField>(&field.rep)) {
        out.jacobian = lin->A;
    } else if (const auto* pol = std::get_if<PolynomialField>(&field.rep)) {
        for (int i = 0; i < q; ++i) {
            for (const Monomial& m : pol->components[static_cast<std::size_t>(i)]) {
                int total = 0, which = -1;
                for (int j = 0; j < q; ++j) {
                    total += m.powers[static_cast<std::size_t>(j)];
                    if (m.powers[static_cast<std::size_t>(j)] == 1) which = j;
                }
                if (total == 1) out.jacobian(i, which) += m.coeff;
            }
        }
    } else {
        const double h = 1e-4;
        for (int j = 0; j < q; ++j) {
            cvec zp = cvec_zero(static_cast<std::size_t>(q));
            auto at = [&](double s) {
                zp[static_cast<std::size_t>(j)] = cplx(s, 0.0);
                return field.eval(zp);
            };
            const cvec f2p = at(2.0 * h), f1p = at(h), f1m = at(-h), f2m = at(-2.0 * h);
            for (int i = 0; i < q; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                out.jacobian(i, j) =
                    (-f2p[ii] + 8.0 * f1p[ii] - 8.0 * f1m[ii] + f2m[ii]) / (12.0 * h);
            }
        }
    }
    out.numerical_radius = numerical_radius(out.jacobian, radius_samples, seed);
    return out;
}

}  // namespace holoflow

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace holoflow {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline cvec cvec_zero(std::size_t q) { return cvec(q, cplx(0.0, 0.0)); }

inline cvec cvec1(cplx z) { return cvec{z}; }

// Hermitian inner product <a,b> = sum a_i * conj(b_i)
inline cplx dot(const cvec& a, const cvec& b) {
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

inline double norm2_sq(const cvec& a) {
    double s = 0.0;
    for (const cplx& z : a) s += std::norm(z);
    return s;
}

inline double norm2(const cvec& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const cvec& a) {
    double m = 0.0;
    for (const cplx& z : a) m = std::max(m, std::abs(z));
    return m;
}

inline cvec operator+(const cvec& a, const cvec& b) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline cvec operator-(const cvec& a, const cvec& b) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline cvec operator*(double s, const cvec& a) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline cvec operator*(cplx s, const cvec& a) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline cvec& operator+=(cvec& a, const cvec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

// a + s*b, the fused update the integrator lives on
inline cvec axpy(const cvec& a, double s, const cvec& b) {
    cvec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
}

inline double dist2(const cvec& a, const cvec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

// Dense square complex matrix, row-major. Sizes here are tiny (q <= 3 in
// practice), so no linear-algebra package is pulled in.
struct CMat {
    int n = 0;
    std::vector<cplx> a;

    CMat() = default;
    explicit CMat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, cplx(0.0, 0.0)) {}

    cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    const cplx& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static CMat identity(int dim) {
        CMat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    static CMat scaled_identity(int dim, cplx s) {
        CMat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = s;
        return m;
    }

    static CMat diagonal(const cvec& d) {
        CMat m(static_cast<int>(d.size()));
        for (int i = 0; i < m.n; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
        return m;
    }
};

inline cvec matvec(const CMat& m, const cvec& z) {
    cvec r(static_cast<std::size_t>(m.n), cplx(0.0, 0.0));
    for (int i = 0; i < m.n; ++i) {
        cplx s(0.0, 0.0);
        for (int j = 0; j < m.n; ++j) s += m(i, j) * z[static_cast<std::size_t>(j)];
        r[static_cast<std::size_t>(i)] = s;
    }
    return r;
}

}  // namespace holoflow

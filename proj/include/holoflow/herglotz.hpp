#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cvec.hpp"
#include "errors.hpp"
#include "fields.hpp"

namespace holoflow {

// One piece of a time-dependent field: for t >= t_start (until the next
// piece takes over) the field is c(t) * H(z) with c a real polynomial in t.
struct HerglotzPiece {
    double t_start = 0.0;
    HolomorphicField field;
    std::vector<double> time_poly{1.0};  // ascending coefficients of c(t)

    double time_scale(double t) const {
        double c = 0.0;
        for (std::size_t i = time_poly.size(); i-- > 0;) c = c * t + time_poly[i];
        return c;
    }
};

// Piecewise-defined time-dependent vector field G(z, t). Pieces cover
// [0, infinity): piece j is active on [t_start_j, t_start_{j+1}).
// order_d is the declared integrability order of its speed majorants.
struct HerglotzField {
    std::vector<HerglotzPiece> pieces;
    double order_d = std::numeric_limits<double>::infinity();

    void validate() const {
        if (pieces.empty()) throw PreconditionError("herglotz field: no pieces");
        if (pieces.front().t_start != 0.0)
            throw PreconditionError("herglotz field: first piece must start at t = 0");
        for (std::size_t i = 1; i < pieces.size(); ++i) {
            if (!(pieces[i].t_start > pieces[i - 1].t_start))
                throw PreconditionError("herglotz field: piece starts must increase strictly");
            if (pieces[i].field.dim() != pieces[0].field.dim())
                throw PreconditionError("herglotz field: pieces have mixed dimensions");
        }
        if (!(order_d >= 1.0)) throw PreconditionError("herglotz field: order must be >= 1");
    }

    int dim() const { return pieces.front().field.dim(); }

    std::size_t piece_index(double t) const {
        std::size_t idx = 0;
        for (std::size_t i = 1; i < pieces.size(); ++i) {
            if (pieces[i].t_start <= t) idx = i;
        }
        return idx;
    }

    cvec eval(const cvec& z, double t) const {
        const HerglotzPiece& p = pieces[piece_index(t)];
        return p.time_scale(t) * p.field.eval(z);
    }

    // switching times strictly inside (a, b)
    std::vector<double> breaks_between(double a, double b) const {
        std::vector<double> out;
        for (std::size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].t_start > a && pieces[i].t_start < b) out.push_back(pieces[i].t_start);
        return out;
    }
};

inline HerglotzField autonomous_herglotz(HolomorphicField f,
                                         double order_d = std::numeric_limits<double>::infinity()) {
    HerglotzField g;
    g.pieces.push_back(HerglotzPiece{0.0, std::move(f), {1.0}});
    g.order_d = order_d;
    g.validate();
    return g;
}

// Piecewise-constant upper bound for speeds over a time window: values[j]
// holds on [knots[j], knots[j+1]).
struct PiecewiseBound {
    std::vector<double> knots;
    std::vector<double> values;

    double integral(double a, double b) const {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
            const double lo = std::max(a, knots[j]);
            const double hi = std::min(b, knots[j + 1]);
            if (hi > lo) acc += values[j] * (hi - lo);
        }
        return acc;
    }

    // L^d norm over the covered window; d = infinity gives the sup
    double lp_norm(double d) const {
        if (values.empty()) return 0.0;
        if (std::isinf(d)) return *std::max_element(values.begin(), values.end());
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < knots.size(); ++j)
            acc += std::pow(values[j], d) * (knots[j + 1] - knots[j]);
        return std::pow(acc, 1.0 / d);
    }
};

}  // namespace holoflow

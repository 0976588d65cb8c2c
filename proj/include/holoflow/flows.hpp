#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "integrator.hpp"
#include "report.hpp"

namespace holoflow {

// Time-t flow map of an autonomous generator. The caller is responsible for
// certifying the field first; an escape here means that certification was
// wrong or missing.
inline cvec semigroup_map(const DomainModel& dom, const HolomorphicField& field, double t,
                          const cvec& z, const IntegratorConfig& cfg = {}) {
    Trajectory traj = integrate_autonomous(dom, field, z, t, cfg);
    if (traj.escaped)
        throw InternalInconsistencyError(
            "semigroup_map: trajectory escaped at t = " + std::to_string(traj.escape_time) +
            "; the field is not a generator");
    return traj.endpoint();
}

// One-parameter family of self-maps f_t, valid for t in [0, lambda), with
// f_0 = id. Used as the input of the product formula.
struct DiscreteFamily {
    std::string name;
    double lambda = 1.0;
    std::function<cvec(double, const cvec&)> map;
};

// Euler step family f_t(z) = z + t H(z). f_0 = id by construction; iterates
// are range-checked by product_formula, since a single Euler step of a
// generator need not map the domain into itself.
inline DiscreteFamily euler_family(const HolomorphicField& field, double lambda = 1.0) {
    return {"euler", lambda,
            [field](double t, const cvec& z) { return axpy(z, t, field.eval(z)); }};
}

inline DiscreteFamily closed_form_family(std::string name,
                                         std::function<cvec(double, const cvec&)> map,
                                         double lambda = 1.0) {
    return {std::move(name), lambda, std::move(map)};
}

// m-fold composition of f_{t/m} applied to each grid point.
inline std::vector<cvec> product_formula(const DomainModel& dom, const DiscreteFamily& family,
                                         double t, int m, const std::vector<cvec>& grid) {
    if (!(t >= 0.0)) throw PreconditionError("product_formula: t must be >= 0");
    if (m < 1) throw PreconditionError("product_formula: m must be >= 1");
    if (!(t / m < family.lambda))
        throw PreconditionError("product_formula: t/m must be below the family's validity bound");
    std::vector<cvec> out;
    out.reserve(grid.size());
    const double step = t / m;
    for (const cvec& z : grid) {
        dom.require_inside(z, "product_formula");
        cvec y = z;
        for (int k = 1; k <= m; ++k) {
            y = family.map(step, y);
            if (!dom.contains(y))
                throw IterationEscapeError(
                    "product_formula: iterate left the domain at composition step " +
                        std::to_string(k) + " of " + std::to_string(m),
                    k);
        }
        out.push_back(std::move(y));
    }
    return out;
}

struct ConvergenceTable {
    std::vector<int> m;
    std::vector<double> sup_error;   // against the reference flow
    std::vector<cvec> last_mapped;   // grid images at the largest m
};

// Runs the product formula along an m ladder and reports sup-norm errors
// against the flow of a reference field.
inline ConvergenceTable product_formula_convergence(const DomainModel& dom,
                                                    const DiscreteFamily& family, double t,
                                                    const std::vector<int>& m_ladder,
                                                    const std::vector<cvec>& grid,
                                                    const HolomorphicField& reference,
                                                    const IntegratorConfig& cfg = {}) {
    std::vector<cvec> ref;
    ref.reserve(grid.size());
    for (const cvec& z : grid) ref.push_back(semigroup_map(dom, reference, t, z, cfg));

    ConvergenceTable table;
    for (int m : m_ladder) {
        std::vector<cvec> mapped = product_formula(dom, family, t, m, grid);
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sup = std::max(sup, dist2(mapped[i], ref[i]));
        table.m.push_back(m);
        table.sup_error.push_back(sup);
        table.last_mapped = std::move(mapped);
    }
    return table;
}

// Alternating composition (flow of g1 for t/m) after (flow of g2 for t/m),
// m times, applied to each grid point. Both fields must be generators.
inline std::vector<cvec> trotter_sum(const DomainModel& dom, const HolomorphicField& g1,
                                     const HolomorphicField& g2, double t, int m,
                                     const std::vector<cvec>& grid,
                                     const IntegratorConfig& cfg = {}) {
    if (!(t >= 0.0)) throw PreconditionError("trotter_sum: t must be >= 0");
    if (m < 1) throw PreconditionError("trotter_sum: m must be >= 1");
    std::vector<cvec> out;
    out.reserve(grid.size());
    const double step = t / m;
    for (const cvec& z : grid) {
        dom.require_inside(z, "trotter_sum");
        cvec y = z;
        for (int k = 0; k < m; ++k) {
            y = semigroup_map(dom, g2, step, y, cfg);
            y = semigroup_map(dom, g1, step, y, cfg);
        }
        out.push_back(std::move(y));
    }
    return out;
}

// Trotter ladder against the flow of the (cone) sum of the two fields.
inline ConvergenceTable trotter_convergence(const DomainModel& dom, const HolomorphicField& g1,
                                            const HolomorphicField& g2, double t,
                                            const std::vector<int>& m_ladder,
                                            const std::vector<cvec>& grid,
                                            const IntegratorConfig& cfg = {}) {
    const HolomorphicField sum = cone_combine({g1, g2}, {1.0, 1.0});
    std::vector<cvec> ref;
    ref.reserve(grid.size());
    for (const cvec& z : grid) ref.push_back(semigroup_map(dom, sum, t, z, cfg));

    ConvergenceTable table;
    for (int m : m_ladder) {
        std::vector<cvec> mapped = trotter_sum(dom, g1, g2, t, m, grid, cfg);
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sup = std::max(sup, dist2(mapped[i], ref[i]));
        table.m.push_back(m);
        table.sup_error.push_back(sup);
        table.last_mapped = std::move(mapped);
    }
    return table;
}

// Samples pairs and verifies that the Kobayashi distance between their flow
// images never increases along a time grid.
inline Report contraction_audit(const DomainModel& dom, const HolomorphicField& field,
                                const std::vector<double>& t_grid, int pairs, std::uint64_t seed,
                                const IntegratorConfig& cfg = {}, double slack = 1e-9,
                                double sample_radius = 0.9) {
    if (pairs < 1) throw PreconditionError("contraction_audit: pairs must be positive");
    std::vector<double> grid = t_grid;
    std::sort(grid.begin(), grid.end());
    if (grid.empty() || grid.front() < 0.0)
        throw PreconditionError("contraction_audit: time grid must be nonempty and nonnegative");

    double worst_step = -std::numeric_limits<double>::infinity();
    double worst_vs_initial = -std::numeric_limits<double>::infinity();
    std::string witness_step, witness_initial;

    for (int i = 0; i < pairs; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const cvec z0 = dom.sample_inside(rng, sample_radius);
        cvec w0 = dom.sample_inside(rng, sample_radius);
        int tries = 0;
        while (dist2(z0, w0) < 1e-6 && tries++ < 1000) w0 = dom.sample_inside(rng, sample_radius);
        if (dist2(z0, w0) < 1e-6)
            throw SamplingError("contraction_audit: could not draw a separated pair");

        cvec z = z0, w = w0;
        double t_prev = 0.0;
        double k_prev = kobayashi_distance(dom, z, w);
        const double k0 = k_prev;
        for (double tj : grid) {
            if (tj > t_prev) {
                z = semigroup_map(dom, field, tj - t_prev, z, cfg);
                w = semigroup_map(dom, field, tj - t_prev, w, cfg);
                t_prev = tj;
            }
            const double kj = kobayashi_distance(dom, z, w);
            if (kj - k_prev > worst_step) {
                worst_step = kj - k_prev;
                std::ostringstream os;
                os << "pair " << i << " at t = " << tj;
                witness_step = os.str();
            }
            if (kj - k0 > worst_vs_initial) {
                worst_vs_initial = kj - k0;
                std::ostringstream os;
                os << "pair " << i << " at t = " << tj;
                witness_initial = os.str();
            }
            k_prev = kj;
        }
    }

    Report rep;
    rep.add("distance-monotone-between-grid-times", worst_step, slack,
            worst_step > slack ? witness_step : std::string{});
    rep.add("distance-vs-initial", worst_vs_initial, slack,
            worst_vs_initial > slack ? witness_initial : std::string{});
    return rep;
}

}  // namespace holoflow

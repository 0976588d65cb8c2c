#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "integrator.hpp"
#include "report.hpp"

namespace holoflow {

enum class Verdict { Generator, NotGenerator, Inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Generator: return "Generator";
        case Verdict::NotGenerator: return "NotGenerator";
        default: return "Inconclusive";
    }
}

struct GeneratorCertificate {
    Verdict verdict = Verdict::Inconclusive;
    std::string method;
    int samples = 0;
    // dissipativity route
    double worst_dini = -std::numeric_limits<double>::infinity();
    std::optional<std::pair<cvec, cvec>> worst_pair;
    // flow route
    std::optional<std::pair<cvec, double>> escape_witness;  // start point, escape time
    bool stalled = false;
};

// Dissipativity test: for sampled distinct pairs (z,w) the forward
// derivative of the distance along (H(z), H(w)) must be <= tol. Pairs are
// drawn up to norm radius 0.999 because violations concentrate near the
// boundary.
inline GeneratorCertificate certify_generator_dissipative(const DomainModel& dom,
                                                          const HolomorphicField& field,
                                                          int pairs, std::uint64_t seed,
                                                          double tol = 1e-8) {
    if (field.dim() != dom.dim)
        throw PreconditionError("certify_generator_dissipative: dimension mismatch");
    if (pairs < 1) throw PreconditionError("certify_generator_dissipative: pairs must be positive");

    GeneratorCertificate cert;
    cert.method = "dissipativity";
    cert.samples = pairs;
    bool ok = true;
    for (int i = 0; i < pairs; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const cvec z = dom.sample_inside(rng, 0.999);
        cvec w = dom.sample_inside(rng, 0.999);
        int tries = 0;
        while (dist2(z, w) < 1e-6 && tries++ < 1000) w = dom.sample_inside(rng, 0.999);
        if (dist2(z, w) < 1e-6)
            throw SamplingError("certify_generator_dissipative: could not draw a separated pair");

        const DiniResult d = dini_directional_derivative(dom, z, w, field.eval(z), field.eval(w));
        if (d.value > cert.worst_dini) {
            cert.worst_dini = d.value;
            cert.worst_pair = {z, w};
        }
        if (d.value > tol) ok = false;
    }
    cert.verdict = ok ? Verdict::Generator : Verdict::NotGenerator;
    return cert;
}

// Flow test: integrate the field from each grid point to the horizon. Any
// escape disproves the generator property and is returned as a witness; a
// stalled integration without an escape leaves the test inconclusive.
inline GeneratorCertificate certify_generator_flow(const DomainModel& dom,
                                                   const HolomorphicField& field, double horizon,
                                                   const std::vector<cvec>& grid,
                                                   const IntegratorConfig& cfg = {}) {
    if (field.dim() != dom.dim)
        throw PreconditionError("certify_generator_flow: dimension mismatch");
    if (!(horizon > 0.0)) throw PreconditionError("certify_generator_flow: horizon must be positive");
    if (grid.empty()) throw PreconditionError("certify_generator_flow: empty start grid");

    GeneratorCertificate cert;
    cert.method = "flow";
    cert.samples = static_cast<int>(grid.size());
    for (const cvec& z : grid) {
        dom.require_inside(z, "certify_generator_flow");
        try {
            Trajectory traj = integrate_autonomous(dom, field, z, horizon, cfg);
            if (traj.escaped) {
                cert.verdict = Verdict::NotGenerator;
                cert.escape_witness = {z, traj.escape_time};
                return cert;
            }
        } catch (const IntegratorStallError&) {
            cert.stalled = true;
        }
    }
    cert.verdict = cert.stalled ? Verdict::Inconclusive : Verdict::Generator;
    return cert;
}

// Default start grid for the flow test: the origin plus points sampled up to
// norm radius 0.9.
inline std::vector<cvec> certification_grid(const DomainModel& dom, int count,
                                            std::uint64_t seed) {
    if (count < 1) throw PreconditionError("certification_grid: count must be positive");
    std::vector<cvec> grid;
    grid.reserve(static_cast<std::size_t>(count));
    grid.push_back(cvec_zero(static_cast<std::size_t>(dom.dim)));
    for (int i = 1; i < count; ++i) {
        Rng rng(seed, 0x9000 + static_cast<std::uint64_t>(i));
        grid.push_back(dom.sample_inside(rng, 0.9));
    }
    return grid;
}

// Growth bound for certified generators on disc or ball:
//   ||G(z)|| <= 5 ||G(0)|| + 4 ||z|| (1-||z||)^{-2} V(DG(0)),
// with V the numerical radius. Sampled up to radius 0.999.
inline Report check_norm_bound(const DomainModel& dom, const HolomorphicField& field,
                               const GeneratorCertificate& cert, int samples, std::uint64_t seed,
                               double slack = 1e-9) {
    if (dom.kind == DomainKind::Polydisc)
        throw PreconditionError("check_norm_bound: stated for the disc and the ball only");
    if (cert.verdict != Verdict::Generator)
        throw PreconditionError("check_norm_bound: field is not a certified generator");
    if (samples < 1) throw PreconditionError("check_norm_bound: samples must be positive");

    const LinearPartAnalysis lin = analyze_linear_part(field);
    const double g0 = norm2(lin.value_at_zero);
    const double V = lin.numerical_radius;

    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed, 0xb0b0 + static_cast<std::uint64_t>(i));
        const cvec z = dom.sample_inside(rng, 0.999);
        const double r = norm2(z);
        const double lhs = norm2(field.eval(z));
        const double rhs = 5.0 * g0 + 4.0 * r / ((1.0 - r) * (1.0 - r)) * V;
        if (lhs - rhs > worst) {
            worst = lhs - rhs;
            std::ostringstream os;
            os << "||z|| = " << r << ", ||G(z)|| = " << lhs << ", bound = " << rhs;
            witness = os.str();
        }
    }
    Report rep;
    rep.add("generator-norm-growth-bound", worst, slack, worst > slack ? witness : std::string{});
    return rep;
}

}  // namespace holoflow

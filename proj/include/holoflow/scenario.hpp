#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "builtins.hpp"
#include "certify.hpp"
#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "fields.hpp"
#include "flows.hpp"
#include "herglotz.hpp"
#include "integrator.hpp"
#include "report.hpp"

namespace holoflow {

using json = nlohmann::json;

namespace scenario_detail {

inline void expect_keys(const json& j, const std::string& path,
                        const std::set<std::string>& allowed,
                        const std::set<std::string>& required) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw SchemaError(path + ": unknown key '" + key + "'");
    }
    for (const auto& key : required) {
        if (!j.contains(key)) throw SchemaError(path + ": missing required key '" + key + "'");
    }
}

inline double get_num(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

inline int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw SchemaError(path + ": expected an integer");
    return j.get<int>();
}

inline cplx parse_complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError(path + ": expected a complex number as [re, im]");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

// A point is an array of [re, im] pairs; a bare [re, im] is accepted as a
// one-dimensional point.
inline cvec parse_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path + ": expected a point");
    if (j[0].is_number()) return cvec1(parse_complex(j, path));
    cvec z;
    for (std::size_t i = 0; i < j.size(); ++i)
        z.push_back(parse_complex(j[i], path + "[" + std::to_string(i) + "]"));
    return z;
}

inline std::vector<double> parse_real_array(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path + ": expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_num(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<int> parse_ladder(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path + ": expected a nonempty array");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(get_int(j[i], path + "[" + std::to_string(i) + "]"));
        if (out.back() < 1 || (i > 0 && out[i] <= out[i - 1]))
            throw SchemaError(path + ": ladder entries must increase strictly from 1");
    }
    return out;
}

inline DomainModel parse_domain(const json& j) {
    expect_keys(j, "domain", {"kind", "dim", "boundary_margin"}, {"kind"});
    if (!j["kind"].is_string()) throw SchemaError("domain.kind: expected a string");
    const std::string kind = j["kind"].get<std::string>();
    const double margin =
        j.contains("boundary_margin") ? get_num(j["boundary_margin"], "domain.boundary_margin")
                                      : 1e-9;
    try {
        if (kind == "disc") {
            if (j.contains("dim") && get_int(j["dim"], "domain.dim") != 1)
                throw SchemaError("domain: the disc has dim 1");
            return DomainModel::disc(margin);
        }
        if (kind == "ball")
            return DomainModel::ball(j.contains("dim") ? get_int(j["dim"], "domain.dim") : 1,
                                     margin);
        if (kind == "polydisc")
            return DomainModel::polydisc(j.contains("dim") ? get_int(j["dim"], "domain.dim") : 1,
                                         margin);
    } catch (const PreconditionError& e) {
        throw SchemaError(std::string("domain: ") + e.what());
    }
    throw SchemaError("domain.kind: expected 'disc', 'ball' or 'polydisc'");
}

inline RationalPoly parse_rational(const json& j, const std::string& path) {
    expect_keys(j, path, {"num", "den"}, {"num"});
    RationalPoly p;
    p.num.clear();
    if (!j["num"].is_array() || j["num"].empty())
        throw SchemaError(path + ".num: expected a nonempty coefficient array");
    for (std::size_t i = 0; i < j["num"].size(); ++i)
        p.num.push_back(parse_complex(j["num"][i], path + ".num[" + std::to_string(i) + "]"));
    if (j.contains("den")) {
        p.den.clear();
        if (!j["den"].is_array() || j["den"].empty())
            throw SchemaError(path + ".den: expected a nonempty coefficient array");
        for (std::size_t i = 0; i < j["den"].size(); ++i)
            p.den.push_back(parse_complex(j["den"][i], path + ".den[" + std::to_string(i) + "]"));
    }
    return p;
}

inline HolomorphicField parse_field(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected a field object");
    if (j.contains("builtin")) {
        expect_keys(j, path, {"builtin", "dim"}, {"builtin"});
        if (!j["builtin"].is_string()) throw SchemaError(path + ".builtin: expected a string");
        const int dim = j.contains("dim") ? get_int(j["dim"], path + ".dim") : 0;
        try {
            return make_builtin_field(j["builtin"].get<std::string>(), dim);
        } catch (const InvalidFieldError& e) {
            throw SchemaError(path + ": " + e.what());
        }
    }
    if (!j.contains("kind")) throw SchemaError(path + ": needs either 'builtin' or 'kind'");
    if (!j["kind"].is_string()) throw SchemaError(path + ".kind: expected a string");
    const std::string kind = j["kind"].get<std::string>();

    if (kind == "linear") {
        expect_keys(j, path, {"kind", "matrix"}, {"kind", "matrix"});
        const json& mat = j["matrix"];
        if (!mat.is_array() || mat.empty()) throw SchemaError(path + ".matrix: expected rows");
        const int q = static_cast<int>(mat.size());
        CMat A(q);
        for (int i = 0; i < q; ++i) {
            const json& row = mat[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != q)
                throw SchemaError(path + ".matrix: must be square");
            for (int k = 0; k < q; ++k)
                A(i, k) = parse_complex(row[static_cast<std::size_t>(k)],
                                        path + ".matrix[" + std::to_string(i) + "][" +
                                            std::to_string(k) + "]");
        }
        return linear_field(std::move(A));
    }
    if (kind == "polynomial") {
        expect_keys(j, path, {"kind", "dim", "terms"}, {"kind", "dim", "terms"});
        PolynomialField p;
        p.dim = get_int(j["dim"], path + ".dim");
        if (p.dim < 1) throw SchemaError(path + ".dim: must be >= 1");
        p.components.resize(static_cast<std::size_t>(p.dim));
        if (!j["terms"].is_array()) throw SchemaError(path + ".terms: expected an array");
        for (std::size_t ti = 0; ti < j["terms"].size(); ++ti) {
            const std::string tpath = path + ".terms[" + std::to_string(ti) + "]";
            const json& term = j["terms"][ti];
            expect_keys(term, tpath, {"component", "powers", "coeff"},
                        {"component", "powers", "coeff"});
            const int comp = get_int(term["component"], tpath + ".component");
            if (comp < 0 || comp >= p.dim)
                throw SchemaError(tpath + ".component: out of range for dim");
            Monomial m;
            if (!term["powers"].is_array() ||
                static_cast<int>(term["powers"].size()) != p.dim)
                throw SchemaError(tpath + ".powers: expected one exponent per coordinate");
            for (std::size_t k = 0; k < term["powers"].size(); ++k) {
                m.powers.push_back(
                    get_int(term["powers"][k], tpath + ".powers[" + std::to_string(k) + "]"));
                if (m.powers.back() < 0) throw SchemaError(tpath + ".powers: must be >= 0");
            }
            m.coeff = parse_complex(term["coeff"], tpath + ".coeff");
            p.components[static_cast<std::size_t>(comp)].push_back(std::move(m));
        }
        return polynomial_field(std::move(p));
    }
    if (kind == "berkson-porta") {
        expect_keys(j, path, {"kind", "tau", "p"}, {"kind", "tau", "p"});
        const cplx tau = parse_complex(j["tau"], path + ".tau");
        const RationalPoly p = parse_rational(j["p"], path + ".p");
        try {
            return berkson_porta(tau, p);
        } catch (const InvalidFieldError& e) {
            throw SchemaError(path + ": " + e.what());
        }
    }
    throw SchemaError(path + ".kind: expected 'linear', 'polynomial' or 'berkson-porta'");
}

inline HerglotzField parse_herglotz(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    if (j.contains("builtin")) {
        expect_keys(j, path, {"builtin"}, {"builtin"});
        if (!j["builtin"].is_string()) throw SchemaError(path + ".builtin: expected a string");
        try {
            return make_builtin_herglotz(j["builtin"].get<std::string>());
        } catch (const InvalidFieldError& e) {
            throw SchemaError(path + ": " + e.what());
        }
    }
    expect_keys(j, path, {"pieces", "order"}, {"pieces"});
    if (!j["pieces"].is_array() || j["pieces"].empty())
        throw SchemaError(path + ".pieces: expected a nonempty array");
    HerglotzField g;
    for (std::size_t i = 0; i < j["pieces"].size(); ++i) {
        const std::string ppath = path + ".pieces[" + std::to_string(i) + "]";
        const json& pj = j["pieces"][i];
        expect_keys(pj, ppath, {"t_start", "field", "time_poly"}, {"t_start", "field"});
        HerglotzPiece piece;
        piece.t_start = get_num(pj["t_start"], ppath + ".t_start");
        piece.field = parse_field(pj["field"], ppath + ".field");
        if (pj.contains("time_poly"))
            piece.time_poly = parse_real_array(pj["time_poly"], ppath + ".time_poly");
        g.pieces.push_back(std::move(piece));
    }
    if (j.contains("order")) {
        if (j["order"].is_string()) {
            if (j["order"].get<std::string>() != "inf")
                throw SchemaError(path + ".order: expected a number or 'inf'");
        } else {
            g.order_d = get_num(j["order"], path + ".order");
        }
    }
    try {
        g.validate();
    } catch (const PreconditionError& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return g;
}

inline EvolutionFamily parse_ef(const json& j, const DomainModel& dom,
                                const IntegratorConfig& icfg, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    if (j.contains("builtin")) {
        expect_keys(j, path, {"builtin"}, {"builtin"});
        if (!j["builtin"].is_string()) throw SchemaError(path + ".builtin: expected a string");
        EvolutionFamily ef = [&] {
            try {
                return make_builtin_ef(j["builtin"].get<std::string>());
            } catch (const InvalidFieldError& e) {
                throw SchemaError(path + ": " + e.what());
            }
        }();
        if (ef.domain.kind != dom.kind || ef.domain.dim != dom.dim)
            throw SchemaError(path + ": builtin evolution families live on the unit disc");
        return ef;
    }
    expect_keys(j, path, {"integrated"}, {"integrated"});
    HerglotzField g = parse_herglotz(j["integrated"], path + ".integrated");
    if (g.dim() != dom.dim) throw SchemaError(path + ": field dimension does not match domain");
    return EvolutionFamily::integrated(dom, std::move(g), icfg);
}

inline std::vector<cvec> parse_grid(const json& j, const DomainModel& dom, std::uint64_t seed,
                                    const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected a grid object");
    if (j.contains("points")) {
        expect_keys(j, path, {"points"}, {"points"});
        if (!j["points"].is_array() || j["points"].empty())
            throw SchemaError(path + ".points: expected a nonempty array");
        std::vector<cvec> grid;
        for (std::size_t i = 0; i < j["points"].size(); ++i) {
            grid.push_back(parse_point(j["points"][i], path + ".points[" + std::to_string(i) + "]"));
            if (!dom.contains(grid.back()))
                throw SchemaError(path + ".points[" + std::to_string(i) +
                                  "]: point lies outside the domain");
        }
        return grid;
    }
    expect_keys(j, path, {"count", "radius"}, {"count", "radius"});
    const int count = get_int(j["count"], path + ".count");
    const double radius = get_num(j["radius"], path + ".radius");
    if (count < 1) throw SchemaError(path + ".count: must be >= 1");
    if (!(radius > 0.0 && radius < 1.0)) throw SchemaError(path + ".radius: must lie in (0,1)");
    std::vector<cvec> grid;
    for (int i = 0; i < count; ++i) {
        Rng rng(seed, 0xc0de0000ULL + static_cast<std::uint64_t>(i));
        grid.push_back(dom.sample_inside(rng, radius));
    }
    return grid;
}

struct Tolerances {
    double dissipativity = 1e-8;
    double contraction_slack = 1e-9;
    double ef1 = 1e-8;
    double ef2 = 1e-8;
    double ef3_slack = 1e-6;
    double roundtrip = 1e-4;
    double norm_bound_slack = 1e-9;
};

inline Tolerances parse_tolerances(const json& j) {
    Tolerances tol;
    if (!j.is_object()) throw SchemaError("tolerances: expected an object");
    expect_keys(j, "tolerances",
                {"dissipativity", "contraction_slack", "ef1", "ef2", "ef3_slack", "roundtrip",
                 "norm_bound_slack"},
                {});
    auto pick = [&](const char* key, double& slot) {
        if (j.contains(key)) slot = get_num(j[key], std::string("tolerances.") + key);
    };
    pick("dissipativity", tol.dissipativity);
    pick("contraction_slack", tol.contraction_slack);
    pick("ef1", tol.ef1);
    pick("ef2", tol.ef2);
    pick("ef3_slack", tol.ef3_slack);
    pick("roundtrip", tol.roundtrip);
    pick("norm_bound_slack", tol.norm_bound_slack);
    return tol;
}

inline IntegratorConfig parse_integrator(const json& j) {
    IntegratorConfig cfg;
    expect_keys(j, "integrator", {"rel_tol", "abs_tol", "max_step"}, {});
    if (j.contains("rel_tol")) cfg.rel_tol = get_num(j["rel_tol"], "integrator.rel_tol");
    if (j.contains("abs_tol")) cfg.abs_tol = get_num(j["abs_tol"], "integrator.abs_tol");
    if (j.contains("max_step")) cfg.max_step = get_num(j["max_step"], "integrator.max_step");
    if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_step > 0.0))
        throw SchemaError("integrator: tolerances and max_step must be positive");
    return cfg;
}

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string render_csv(const std::vector<double>& times, const std::vector<cvec>& points) {
    std::ostringstream os;
    const std::size_t q = points.front().size();
    os << "t";
    for (std::size_t i = 1; i <= q; ++i) os << ",re_z_" << i << ",im_z_" << i;
    os << "\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        os << g17(times[k]);
        for (std::size_t i = 0; i < q; ++i)
            os << "," << g17(points[k][i].real()) << "," << g17(points[k][i].imag());
        os << "\n";
    }
    return os.str();
}

inline std::string point_str(const cvec& z) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (i) os << ", ";
        os << z[i].real() << (z[i].imag() < 0 ? "" : "+") << z[i].imag() << "i";
    }
    os << ")";
    return os.str();
}

struct Outcome {
    json verdicts = json::object();
    Report checks;
    std::vector<std::string> witnesses;
    std::optional<std::string> csv;
    int exit_code = 0;
};

inline json checks_json(const Report& rep) {
    json out = json::array();
    for (const CheckItem& it : rep.items) {
        out.push_back({{"name", it.name},
                       {"residual", it.residual},
                       {"tolerance", it.tolerance},
                       {"pass", it.pass},
                       {"witness", it.witness}});
    }
    return out;
}

inline const json& params_of(const json& sc) {
    static const json empty = json::object();
    return sc.contains("params") ? sc["params"] : empty;
}

// ----- command handlers -----

inline Outcome run_check_generator(const json& sc, const DomainModel& dom, std::uint64_t seed,
                                   const IntegratorConfig& icfg, const Tolerances& tol) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"pairs", "horizon", "grid_points", "norm_bound_samples"}, {});
    const int pairs = pj.contains("pairs") ? get_int(pj["pairs"], "params.pairs") : 1000;
    const double horizon =
        pj.contains("horizon") ? get_num(pj["horizon"], "params.horizon") : 50.0;
    const int grid_points =
        pj.contains("grid_points") ? get_int(pj["grid_points"], "params.grid_points") : 25;
    const int nb_samples = pj.contains("norm_bound_samples")
                               ? get_int(pj["norm_bound_samples"], "params.norm_bound_samples")
                               : 200;

    const HolomorphicField field = parse_field(sc.at("field"), "field");
    if (field.dim() != dom.dim) throw SchemaError("field: dimension does not match domain");

    Outcome out;
    const GeneratorCertificate diss =
        certify_generator_dissipative(dom, field, pairs, seed, tol.dissipativity);
    const std::vector<cvec> grid = certification_grid(dom, grid_points, seed);
    const GeneratorCertificate flow = certify_generator_flow(dom, field, horizon, grid, icfg);

    Verdict overall = Verdict::Generator;
    if (diss.verdict == Verdict::NotGenerator || flow.verdict == Verdict::NotGenerator)
        overall = Verdict::NotGenerator;
    else if (flow.verdict == Verdict::Inconclusive)
        overall = Verdict::Inconclusive;

    out.verdicts["dissipativity"] = verdict_name(diss.verdict);
    out.verdicts["flow"] = verdict_name(flow.verdict);
    out.verdicts["overall"] = verdict_name(overall);

    std::string diss_witness;
    if (diss.verdict != Verdict::Generator && diss.worst_pair) {
        diss_witness = "worst pair z = " + point_str(diss.worst_pair->first) +
                       ", w = " + point_str(diss.worst_pair->second);
        out.witnesses.push_back(diss_witness);
    }
    out.checks.add("dissipativity-worst-forward-derivative", diss.worst_dini, tol.dissipativity,
                   diss_witness);
    std::string flow_witness;
    if (flow.escape_witness) {
        std::ostringstream os;
        os << "escape from z0 = " << point_str(flow.escape_witness->first)
           << " at t = " << flow.escape_witness->second;
        flow_witness = os.str();
        out.witnesses.push_back(flow_witness);
        out.verdicts["escape_time"] = flow.escape_witness->second;
    }
    out.checks.add("flow-escape", flow.escape_witness ? 1.0 : 0.0, 0.5, flow_witness);

    if (overall == Verdict::Generator && dom.kind != DomainKind::Polydisc) {
        const Report nb = check_norm_bound(dom, field, diss, nb_samples, seed,
                                           tol.norm_bound_slack);
        for (const CheckItem& it : nb.items) out.checks.items.push_back(it);
    }

    if (overall == Verdict::NotGenerator || !out.checks.pass())
        out.exit_code = 1;
    else if (overall == Verdict::Inconclusive)
        out.exit_code = 3;
    return out;
}

inline Outcome run_flow(const json& sc, const DomainModel& dom, std::uint64_t /*seed*/,
                        const IntegratorConfig& icfg, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"z0", "t_end"}, {"z0", "t_end"});
    const cvec z0 = parse_point(pj["z0"], "params.z0");
    const double t_end = get_num(pj["t_end"], "params.t_end");
    const HolomorphicField field = parse_field(sc.at("field"), "field");
    if (field.dim() != dom.dim) throw SchemaError("field: dimension does not match domain");

    Outcome out;
    const Trajectory traj = integrate_autonomous(dom, field, z0, t_end, icfg);
    out.verdicts["escaped"] = traj.escaped;
    out.verdicts["end_time"] = traj.end_time();
    if (traj.escaped) {
        out.verdicts["escape_time"] = traj.escape_time;
        std::ostringstream os;
        os << "trajectory escaped at t = " << traj.escape_time;
        out.witnesses.push_back(os.str());
    }
    out.csv = render_csv(traj.times, traj.states);
    return out;
}

inline Outcome run_evolve(const json& sc, const DomainModel& dom, std::uint64_t /*seed*/,
                          const IntegratorConfig& icfg, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"z0", "s", "t"}, {"z0", "s", "t"});
    const cvec z0 = parse_point(pj["z0"], "params.z0");
    const double s = get_num(pj["s"], "params.s");
    const double t = get_num(pj["t"], "params.t");
    HerglotzField g = parse_herglotz(sc.at("herglotz"), "herglotz");
    if (g.dim() != dom.dim) throw SchemaError("herglotz: dimension does not match domain");
    if (!(s >= 0.0 && t >= s)) throw SchemaError("params: need 0 <= s <= t");

    Outcome out;
    const Trajectory traj = solve_loewner_trajectory(dom, g, s, t, z0, icfg);
    out.verdicts["completed"] = true;
    out.csv = render_csv(traj.times, traj.states);
    return out;
}

inline Outcome run_recover(const json& sc, const DomainModel& dom, std::uint64_t seed,
                           const IntegratorConfig& icfg, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"s", "grid", "n_ladder"}, {"s", "grid", "n_ladder"});
    const double s = get_num(pj["s"], "params.s");
    const std::vector<cvec> grid = parse_grid(pj["grid"], dom, seed, "params.grid");
    const std::vector<int> ladder = parse_ladder(pj["n_ladder"], "params.n_ladder");
    EvolutionFamily ef = parse_ef(sc.at("ef"), dom, icfg, "ef");

    Outcome out;
    const RecoveryResult rec = recover_field(ef, s, grid, ladder);
    out.verdicts["first_order_consistent"] = rec.first_order_consistent;
    {
        std::ostringstream os;
        os << "cauchy increments:";
        for (double c : rec.cauchy_sup) os << " " << c;
        out.witnesses.push_back(os.str());
    }
    out.checks.add("cauchy-first-order-decay", rec.first_order_consistent ? 0.0 : 1.0, 0.5,
                   rec.first_order_consistent ? std::string{} : out.witnesses.back());
    std::vector<double> ts(grid.size(), s);
    out.csv = render_csv(ts, rec.extrapolated);
    if (!rec.first_order_consistent) out.exit_code = 3;
    return out;
}

inline Outcome run_product_formula(const json& sc, const DomainModel& dom, std::uint64_t seed,
                                   const IntegratorConfig& icfg, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"t", "m_ladder", "grid", "reference"}, {"t", "m_ladder", "grid"});
    const double t = get_num(pj["t"], "params.t");
    const std::vector<int> ladder = parse_ladder(pj["m_ladder"], "params.m_ladder");
    const std::vector<cvec> grid = parse_grid(pj["grid"], dom, seed, "params.grid");

    const json& fj = sc.at("family");
    if (!fj.is_object() || !fj.contains("type")) throw SchemaError("family: expected {type, ...}");
    DiscreteFamily family;
    if (fj["type"] == "shrink") {
        expect_keys(fj, "family", {"type"}, {"type"});
        family = make_builtin_family("shrink");
    } else if (fj["type"] == "euler") {
        expect_keys(fj, "family", {"type", "field", "lambda"}, {"type", "field"});
        const HolomorphicField f = parse_field(fj["field"], "family.field");
        if (f.dim() != dom.dim) throw SchemaError("family.field: dimension does not match domain");
        family = euler_family(f, fj.contains("lambda") ? get_num(fj["lambda"], "family.lambda")
                                                       : 1.0);
    } else {
        throw SchemaError("family.type: expected 'shrink' or 'euler'");
    }

    Outcome out;
    json table = json::array();
    if (pj.contains("reference")) {
        const HolomorphicField ref = parse_field(pj["reference"], "params.reference");
        if (ref.dim() != dom.dim)
            throw SchemaError("params.reference: dimension does not match domain");
        const ConvergenceTable conv =
            product_formula_convergence(dom, family, t, ladder, grid, ref, icfg);
        for (std::size_t i = 0; i < conv.m.size(); ++i)
            table.push_back({{"m", conv.m[i]}, {"sup_error", conv.sup_error[i]}});
        out.checks.add("convergence-improves", conv.sup_error.back() - conv.sup_error.front(),
                       0.0);
        std::vector<double> ts(grid.size(), t);
        out.csv = render_csv(ts, conv.last_mapped);
    } else {
        const std::vector<cvec> mapped = product_formula(dom, family, t, ladder.back(), grid);
        std::vector<double> ts(grid.size(), t);
        out.csv = render_csv(ts, mapped);
    }
    out.verdicts["m_ladder"] = ladder;
    if (!table.empty()) out.verdicts["convergence"] = table;
    if (!out.checks.pass()) out.exit_code = 1;
    return out;
}

inline Outcome run_trotter(const json& sc, const DomainModel& dom, std::uint64_t seed,
                           const IntegratorConfig& icfg, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"t", "m_ladder", "grid"}, {"t", "m_ladder", "grid"});
    const double t = get_num(pj["t"], "params.t");
    const std::vector<int> ladder = parse_ladder(pj["m_ladder"], "params.m_ladder");
    const std::vector<cvec> grid = parse_grid(pj["grid"], dom, seed, "params.grid");

    const json& fj = sc.at("fields");
    if (!fj.is_array() || fj.size() != 2) throw SchemaError("fields: expected exactly two fields");
    const HolomorphicField g1 = parse_field(fj[0], "fields[0]");
    const HolomorphicField g2 = parse_field(fj[1], "fields[1]");
    if (g1.dim() != dom.dim || g2.dim() != dom.dim)
        throw SchemaError("fields: dimension does not match domain");

    Outcome out;
    const ConvergenceTable conv = trotter_convergence(dom, g1, g2, t, ladder, grid, icfg);
    json table = json::array();
    for (std::size_t i = 0; i < conv.m.size(); ++i)
        table.push_back({{"m", conv.m[i]}, {"sup_error", conv.sup_error[i]}});
    out.verdicts["convergence"] = table;
    out.checks.add("convergence-improves", conv.sup_error.back() - conv.sup_error.front(), 0.0);
    std::vector<double> ts(grid.size(), t);
    out.csv = render_csv(ts, conv.last_mapped);
    if (!out.checks.pass()) out.exit_code = 1;
    return out;
}

inline Outcome run_audit_ef(const json& sc, const DomainModel& dom, std::uint64_t seed,
                            const IntegratorConfig& icfg, const Tolerances& tol) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"s_grid", "t_grid", "compact_radius", "points"}, {});
    EFAuditConfig acfg;
    acfg.seed = seed;
    acfg.ef1_tol = tol.ef1;
    acfg.ef2_tol = tol.ef2;
    acfg.ef3_slack = tol.ef3_slack;
    if (pj.contains("s_grid")) acfg.s_grid = parse_real_array(pj["s_grid"], "params.s_grid");
    if (pj.contains("t_grid")) acfg.t_grid = parse_real_array(pj["t_grid"], "params.t_grid");
    if (pj.contains("compact_radius")) {
        acfg.compact_radius = get_num(pj["compact_radius"], "params.compact_radius");
        if (!(acfg.compact_radius > 0.0 && acfg.compact_radius < 1.0))
            throw SchemaError("params.compact_radius: must lie in (0,1)");
    }
    if (pj.contains("points")) acfg.points = get_int(pj["points"], "params.points");

    EvolutionFamily ef = parse_ef(sc.at("ef"), dom, icfg, "ef");

    Outcome out;
    const EFReport rep = audit_evolution_family(ef, acfg);
    out.checks = rep.to_report(acfg);
    out.verdicts["ef1_max"] = rep.ef1_max;
    out.verdicts["ef2_max"] = rep.ef2_max;
    out.verdicts["ef3_worst_slack"] = rep.ef3_worst;
    out.verdicts["majorant_lp_norm"] = rep.majorant_lp;
    out.verdicts["declared_order"] =
        std::isinf(rep.declared_order) ? json("inf") : json(rep.declared_order);
    if (!rep.ef2_witness.empty()) out.witnesses.push_back("ef2 worst: " + rep.ef2_witness);
    if (!rep.ef3_witness.empty()) out.witnesses.push_back("ef3 worst: " + rep.ef3_witness);
    if (!out.checks.pass()) out.exit_code = 1;
    return out;
}

inline Outcome run_audit_distance(const json& sc, const DomainModel& dom, std::uint64_t seed,
                                  const IntegratorConfig& /*icfg*/, const Tolerances& /*tol*/) {
    const json& pj = params_of(sc);
    expect_keys(pj, "params", {"samples", "compact_radius", "fd_checks"}, {});
    const int samples = pj.contains("samples") ? get_int(pj["samples"], "params.samples") : 200;
    const double radius = pj.contains("compact_radius")
                              ? get_num(pj["compact_radius"], "params.compact_radius")
                              : 0.7;
    const int fd_checks =
        pj.contains("fd_checks") ? get_int(pj["fd_checks"], "params.fd_checks") : 25;
    if (samples < 1) throw SchemaError("params.samples: must be >= 1");
    if (!(radius > 0.0 && radius < 1.0)) throw SchemaError("params.compact_radius: in (0,1)");

    double sym = 0.0, tri = -std::numeric_limits<double>::infinity(), neg = 0.0, norm_dev = 0.0;
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed, 0xd15c0 + static_cast<std::uint64_t>(i));
        const cvec z = dom.sample_inside(rng, radius);
        const cvec w = dom.sample_inside(rng, radius);
        const cvec v = dom.sample_inside(rng, radius);
        const double kzw = kobayashi_distance(dom, z, w);
        sym = std::max(sym, std::abs(kzw - kobayashi_distance(dom, w, z)));
        tri = std::max(tri, kzw - kobayashi_distance(dom, z, v) - kobayashi_distance(dom, v, w));
        neg = std::max(neg, -kzw);
        const double r = rng.uniform(0.05, radius);
        cvec re1 = cvec_zero(static_cast<std::size_t>(dom.dim));
        re1[0] = r;
        norm_dev = std::max(norm_dev,
                            std::abs(kobayashi_distance(
                                         dom, cvec_zero(static_cast<std::size_t>(dom.dim)), re1) -
                                     std::atanh(r)));
    }

    double dini_dev = 0.0;
    for (int i = 0; i < fd_checks; ++i) {
        Rng rng(seed, 0xf0f0 + static_cast<std::uint64_t>(i));
        const cvec z = dom.sample_inside(rng, radius);
        cvec w = dom.sample_inside(rng, radius);
        int tries = 0;
        while (dist2(z, w) < 1e-3 && tries++ < 100) w = dom.sample_inside(rng, radius);
        if (dist2(z, w) < 1e-3) continue;
        const cvec u = 0.5 * rng.unit_vector(dom.dim);
        const cvec v = 0.5 * rng.unit_vector(dom.dim);
        const DiniResult d = dini_directional_derivative(dom, z, w, u, v);
        if (d.tie_locus) continue;
        dini_dev = std::max(dini_dev, std::abs(d.value - dini_forward_difference(dom, z, w, u, v)));
    }

    const LipschitzEstimate lip = lipschitz_certificate(dom, radius, samples, seed);

    Outcome out;
    out.checks.add("distance-symmetry", sym, 1e-12);
    out.checks.add("triangle-inequality", tri, 1e-10);
    out.checks.add("distance-nonnegative", neg, 0.0);
    out.checks.add("radial-normalization", norm_dev, 1e-12);
    out.checks.add("forward-derivative-closed-form-vs-differences", dini_dev, 1e-6);
    out.checks.add("lipschitz-constant-dominates", lip.worst_ratio - lip.constant, 1e-12);
    out.verdicts["lipschitz_constant"] = lip.constant;
    out.verdicts["worst_ratio"] = lip.worst_ratio;
    if (!out.checks.pass()) out.exit_code = 1;
    return out;
}

}  // namespace scenario_detail

inline void print_builtins(std::ostream& os) {
    os << "fields:\n";
    for (const auto& e : builtin_field_catalog()) os << "  " << e.name << "  -  " << e.note << "\n";
    os << "time-dependent fields:\n";
    for (const auto& e : builtin_herglotz_catalog())
        os << "  " << e.name << "  -  " << e.note << "\n";
    os << "evolution families:\n";
    for (const auto& e : builtin_ef_catalog()) os << "  " << e.name << "  -  " << e.note << "\n";
    os << "discrete families:\n";
    for (const auto& e : builtin_family_catalog())
        os << "  " << e.name << "  -  " << e.note << "\n";
}

// Executes a scenario file and writes report.json (and data.csv when the
// command produces trajectory or grid data) into out_dir.
// Exit codes: 0 all checks pass, 1 mathematical violation (witnesses in the
// report), 2 input or schema error, 3 numerical failure (stall, inconclusive
// verdict, failed convergence certificate).
inline int run_scenario(const std::string& scenario_path, const std::string& out_dir,
                        std::optional<std::uint64_t> seed_override, bool quiet,
                        std::ostream& log) {
    namespace sd = scenario_detail;
    const auto t_begin = std::chrono::steady_clock::now();

    json report;
    report["scenario_path"] = scenario_path;
    int code = 0;
    std::string command = "?";
    sd::Outcome outcome;
    json scenario_echo;
    std::uint64_t seed = 0;

    try {
        std::ifstream in(scenario_path);
        if (!in) throw SchemaError("cannot open scenario file '" + scenario_path + "'");
        json sc;
        try {
            sc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
        }
        scenario_echo = sc;

        static const std::set<std::string> commands = {
            "check-generator", "flow",    "evolve",   "recover",
            "product-formula", "trotter", "audit-ef", "audit-distance"};
        sd::expect_keys(sc, "scenario",
                        {"command", "domain", "seed", "integrator", "tolerances", "field",
                         "fields", "herglotz", "family", "ef", "params"},
                        {"command", "domain"});
        if (!sc["command"].is_string() || !commands.count(sc["command"].get<std::string>()))
            throw SchemaError("command: expected one of check-generator, flow, evolve, recover, "
                              "product-formula, trotter, audit-ef, audit-distance");
        command = sc["command"].get<std::string>();

        const DomainModel dom = sd::parse_domain(sc["domain"]);
        if (sc.contains("seed")) {
            if (!sc["seed"].is_number_integer() && !sc["seed"].is_number_unsigned())
                throw SchemaError("seed: expected an integer");
            seed = sc["seed"].get<std::uint64_t>();
        }
        if (seed_override) seed = *seed_override;
        const sd::Tolerances tol =
            sc.contains("tolerances") ? sd::parse_tolerances(sc["tolerances"]) : sd::Tolerances{};
        const IntegratorConfig icfg =
            sc.contains("integrator") ? sd::parse_integrator(sc["integrator"]) : IntegratorConfig{};

        auto forbid = [&](const char* key, std::initializer_list<const char*> for_commands) {
            bool wanted = false;
            for (const char* c : for_commands) wanted = wanted || command == c;
            if (!wanted && sc.contains(key))
                throw SchemaError(std::string(key) + ": not accepted by command '" + command +
                                  "'");
        };
        forbid("field", {"check-generator", "flow"});
        forbid("fields", {"trotter"});
        forbid("herglotz", {"evolve"});
        forbid("family", {"product-formula"});
        forbid("ef", {"recover", "audit-ef"});

        if (command == "check-generator")
            outcome = sd::run_check_generator(sc, dom, seed, icfg, tol);
        else if (command == "flow")
            outcome = sd::run_flow(sc, dom, seed, icfg, tol);
        else if (command == "evolve")
            outcome = sd::run_evolve(sc, dom, seed, icfg, tol);
        else if (command == "recover")
            outcome = sd::run_recover(sc, dom, seed, icfg, tol);
        else if (command == "product-formula")
            outcome = sd::run_product_formula(sc, dom, seed, icfg, tol);
        else if (command == "trotter")
            outcome = sd::run_trotter(sc, dom, seed, icfg, tol);
        else if (command == "audit-ef")
            outcome = sd::run_audit_ef(sc, dom, seed, icfg, tol);
        else
            outcome = sd::run_audit_distance(sc, dom, seed, icfg, tol);
        code = outcome.exit_code;
    } catch (const SchemaError& e) {
        code = 2;
        report["error"] = e.what();
    } catch (const json::exception& e) {
        code = 2;
        report["error"] = std::string("scenario structure error: ") + e.what();
    } catch (const IntegratorStallError& e) {
        code = 3;
        report["error"] = e.what();
    } catch (const SamplingError& e) {
        code = 3;
        report["error"] = e.what();
    } catch (const StepSizeError& e) {
        code = 3;
        report["error"] = e.what();
    } catch (const NonGeneratorPieceError& e) {
        code = 1;
        report["error"] = e.what();
        outcome.witnesses.push_back(e.what());
    } catch (const IterationEscapeError& e) {
        code = 1;
        report["error"] = e.what();
        outcome.witnesses.push_back(e.what());
    } catch (const InternalInconsistencyError& e) {
        code = 1;
        report["error"] = e.what();
        outcome.witnesses.push_back(e.what());
    } catch (const Error& e) {
        // remaining library errors are bad inputs: domain violations,
        // invalid fields/weights/compacts, degenerate pairs, preconditions,
        // non-regular recovery times
        code = 2;
        report["error"] = e.what();
    }

    const auto t_finish = std::chrono::steady_clock::now();
    report["command"] = command;
    report["seed"] = seed;
    report["exit_code"] = code;
    report["scenario_echo"] = scenario_echo;
    report["verdicts"] = outcome.verdicts;
    report["checks"] = sd::checks_json(outcome.checks);
    report["violations"] = outcome.checks.violations();
    report["witnesses"] = outcome.witnesses;
    report["timing_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(t_finish - t_begin).count();
    report["data_csv"] = outcome.csv ? json("data.csv") : json(nullptr);

    try {
        std::filesystem::create_directories(out_dir);
        {
            std::ofstream rf(std::filesystem::path(out_dir) / "report.json",
                             std::ios::binary | std::ios::trunc);
            rf << report.dump(2) << "\n";
        }
        if (outcome.csv) {
            std::ofstream cf(std::filesystem::path(out_dir) / "data.csv",
                             std::ios::binary | std::ios::trunc);
            cf << *outcome.csv;
        }
    } catch (const std::exception& e) {
        if (!quiet) log << "failed to write outputs: " << e.what() << "\n";
        return 2;
    }

    if (!quiet) {
        if (report.contains("error"))
            log << command << ": error: " << report["error"].get<std::string>() << "\n";
        for (const auto& w : outcome.witnesses) log << "witness: " << w << "\n";
        log << command << ": exit " << code << " (" << outcome.checks.violations()
            << " violation(s))\n";
    }
    return code;
}

}  // namespace holoflow

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "herglotz.hpp"
#include "integrator.hpp"
#include "report.hpp"

namespace holoflow {

// Nonautonomous solve over [s, t], restarted at every field switching time
// so each integrated segment sees a single smooth piece. An escape is a
// failure of the input to be a Herglotz field and reports the offending
// piece.
inline Trajectory integrate_herglotz(const DomainModel& dom, const HerglotzField& G,
                                     const cvec& z, double s, double t,
                                     const IntegratorConfig& cfg = {}) {
    G.validate();
    if (G.dim() != dom.dim)
        throw PreconditionError("integrate_herglotz: field and domain dimensions differ");
    if (!(s >= 0.0 && t >= s)) throw PreconditionError("integrate_herglotz: need 0 <= s <= t");
    dom.require_inside(z, "integrate_herglotz");

    std::vector<double> cuts{s};
    for (double b : G.breaks_between(s, t)) cuts.push_back(b);
    cuts.push_back(t);

    Trajectory full;
    full.times.push_back(s);
    full.states.push_back(z);
    cvec y = z;
    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double a = cuts[seg], b = cuts[seg + 1];
        if (b <= a) continue;
        const std::size_t pidx = G.piece_index(a);
        const HerglotzPiece& piece = G.pieces[pidx];
        auto rhs = [&piece](double tau, const cvec& p) {
            return piece.time_scale(tau) * piece.field.eval(p);
        };
        Trajectory tr;
        try {
            tr = integrate_ode(dom, rhs, y, a, b, cfg);
        } catch (IntegratorStallError& e) {
            for (std::size_t k = 1; k < e.prefix.times.size(); ++k) {
                full.times.push_back(e.prefix.times[k]);
                full.states.push_back(std::move(e.prefix.states[k]));
            }
            throw IntegratorStallError(e.what(), std::move(full));
        }
        if (tr.escaped)
            throw NonGeneratorPieceError(
                "integrate_herglotz: trajectory escaped at t = " + std::to_string(tr.escape_time) +
                    " inside piece " + std::to_string(pidx),
                static_cast<int>(pidx), tr.escape_time);
        for (std::size_t k = 1; k < tr.times.size(); ++k) {
            full.times.push_back(tr.times[k]);
            full.states.push_back(std::move(tr.states[k]));
        }
        y = full.states.back();
    }
    return full;
}

inline Trajectory solve_loewner_trajectory(const DomainModel& dom, const HerglotzField& G,
                                           double s, double t, const cvec& z,
                                           const IntegratorConfig& cfg = {}) {
    return integrate_herglotz(dom, G, z, s, t, cfg);
}

// Endpoint of the nonautonomous solve: the evolution map applied to z.
inline cvec solve_loewner_ode(const DomainModel& dom, const HerglotzField& G, double s, double t,
                              const cvec& z, const IntegratorConfig& cfg = {}) {
    return integrate_herglotz(dom, G, z, s, t, cfg).endpoint();
}

// Two-parameter family of maps phi_{s,t}. Either integrated on demand from a
// Herglotz field (with a trajectory cache so repeated queries extend earlier
// solves instead of restarting them) or given in closed form.
class EvolutionFamily {
public:
    struct Integrated {
        HerglotzField field;
        IntegratorConfig cfg;
    };
    struct ClosedForm {
        std::string name;
        std::function<cvec(double, double, const cvec&)> map;
    };

    DomainModel domain;
    std::variant<Integrated, ClosedForm> source;
    double declared_order = std::numeric_limits<double>::infinity();

    static EvolutionFamily integrated(DomainModel dom, HerglotzField g,
                                      IntegratorConfig cfg = {}) {
        g.validate();
        if (g.dim() != dom.dim)
            throw PreconditionError("EvolutionFamily: field and domain dimensions differ");
        EvolutionFamily ef;
        ef.domain = dom;
        ef.declared_order = g.order_d;
        ef.source = Integrated{std::move(g), cfg};
        return ef;
    }

    static EvolutionFamily closed(DomainModel dom, std::string name,
                                  std::function<cvec(double, double, const cvec&)> map,
                                  double order = std::numeric_limits<double>::infinity()) {
        EvolutionFamily ef;
        ef.domain = dom;
        ef.declared_order = order;
        ef.source = ClosedForm{std::move(name), std::move(map)};
        return ef;
    }

    bool is_integrated() const { return std::holds_alternative<Integrated>(source); }

    cvec apply(double s, double t, const cvec& z) const {
        if (!(s >= 0.0)) throw PreconditionError("EvolutionFamily: s must be >= 0");
        if (!(t >= s)) throw PreconditionError("EvolutionFamily: need s <= t");
        domain.require_inside(z, "EvolutionFamily");
        if (t == s) return z;
        if (const auto* cf = std::get_if<ClosedForm>(&source)) return cf->map(s, t, z);
        const auto& in = std::get<Integrated>(source);

        const Key key{s, z};
        double t0 = s;
        cvec y0 = z;
        {
            std::shared_lock lock(cache_->mutex);
            auto it = cache_->branches.find(key);
            if (it != cache_->branches.end()) {
                for (const auto& node : it->second) {
                    if (node.first == t) return node.second;
                    if (node.first < t && node.first > t0) {
                        t0 = node.first;
                        y0 = node.second;
                    }
                }
            }
        }
        const cvec end = integrate_herglotz(domain, in.field, y0, t0, t, in.cfg).endpoint();
        {
            std::unique_lock lock(cache_->mutex);
            auto& branch = cache_->branches[key];
            auto pos = std::lower_bound(branch.begin(), branch.end(), t,
                                        [](const auto& node, double tt) { return node.first < tt; });
            if (pos == branch.end() || pos->first != t) branch.insert(pos, {t, end});
        }
        return end;
    }

private:
    struct Key {
        double s;
        cvec z;
        bool operator<(const Key& o) const {
            if (s != o.s) return s < o.s;
            if (z.size() != o.z.size()) return z.size() < o.z.size();
            for (std::size_t i = 0; i < z.size(); ++i) {
                if (z[i].real() != o.z[i].real()) return z[i].real() < o.z[i].real();
                if (z[i].imag() != o.z[i].imag()) return z[i].imag() < o.z[i].imag();
            }
            return false;
        }
    };
    struct CacheState {
        std::map<Key, std::vector<std::pair<double, cvec>>> branches;
        mutable std::shared_mutex mutex;
    };
    std::shared_ptr<CacheState> cache_ = std::make_shared<CacheState>();
};

struct EFAuditConfig {
    std::vector<double> s_grid{0.0, 0.25, 0.5, 1.0};
    std::vector<double> t_grid{0.0, 0.5, 1.0, 1.5, 2.0};
    double compact_radius = 0.5;
    int points = 8;
    std::uint64_t seed = 2026;
    double ef1_tol = 1e-8;
    double ef2_tol = 1e-8;
    double ef3_slack = 1e-6;
};

struct EFReport {
    double ef1_max = 0.0;
    double ef2_max = 0.0;
    double ef3_worst = -std::numeric_limits<double>::infinity();
    PiecewiseBound majorant;
    double majorant_lp = 0.0;
    double declared_order = std::numeric_limits<double>::infinity();
    bool order_consistent = true;
    std::string ef2_witness;
    std::string ef3_witness;

    Report to_report(const EFAuditConfig& cfg) const {
        Report rep;
        rep.add("initial-condition", ef1_max, cfg.ef1_tol);
        rep.add("two-parameter-composition", ef2_max, cfg.ef2_tol,
                ef2_max > cfg.ef2_tol ? ef2_witness : std::string{});
        rep.add("speed-majorant", ef3_worst, cfg.ef3_slack,
                ef3_worst > cfg.ef3_slack ? ef3_witness : std::string{});
        rep.add("majorant-order-integrable", order_consistent ? 0.0 : 1.0, 0.5);
        return rep;
    }
};

// Checks the three algebraic/metric properties of an evolution family on
// sampled data: phi_{s,s} = id, the two-parameter composition identity in
// the Kobayashi metric, and the absolute-continuity bound
// ||phi_{s,u}(z) - phi_{s,t}(z)|| <= integral of a speed majorant, where the
// majorant is the sampled sup of realized speeds per time cell, inflated by
// 1.1. Also reports the L^d norm of that majorant against the declared
// order.
inline EFReport audit_evolution_family(const EvolutionFamily& ef, const EFAuditConfig& acfg = {}) {
    const DomainModel& dom = ef.domain;
    if (acfg.points < 1) throw PreconditionError("audit_evolution_family: points must be positive");
    for (double s : acfg.s_grid)
        if (!(s >= 0.0)) throw PreconditionError("audit_evolution_family: negative time in s grid");

    std::vector<double> U = acfg.t_grid;
    U.insert(U.end(), acfg.s_grid.begin(), acfg.s_grid.end());
    std::sort(U.begin(), U.end());
    U.erase(std::unique(U.begin(), U.end()), U.end());
    if (U.empty()) throw PreconditionError("audit_evolution_family: empty time grid");
    const double t_end = U.back();

    std::vector<cvec> pts;
    for (int i = 0; i < acfg.points; ++i) {
        Rng rng(acfg.seed, 0xaaa0 + static_cast<std::uint64_t>(i));
        pts.push_back(dom.sample_inside(rng, acfg.compact_radius));
    }

    EFReport rep;
    rep.declared_order = ef.declared_order;

    // EF1 on the raw source map (the cached path short-circuits t == s)
    if (const auto* cf = std::get_if<EvolutionFamily::ClosedForm>(&ef.source)) {
        for (double s : acfg.s_grid)
            for (const cvec& z : pts) rep.ef1_max = std::max(rep.ef1_max, dist2(cf->map(s, s, z), z));
    }

    // majorant knots: audited times plus field switching times
    std::vector<double> knots{0.0};
    knots.insert(knots.end(), U.begin(), U.end());
    if (const auto* in = std::get_if<EvolutionFamily::Integrated>(&ef.source))
        for (double b : in->field.breaks_between(0.0, t_end)) knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    if (knots.size() < 2) knots.push_back(t_end + 1.0);

    std::vector<double> cell_sup(knots.size() - 1, 0.0);
    auto cell_of = [&knots](double t) {
        std::size_t c = 0;
        for (std::size_t j = 0; j + 1 < knots.size(); ++j)
            if (knots[j] <= t) c = j;
        return c;
    };

    if (const auto* in = std::get_if<EvolutionFamily::Integrated>(&ef.source)) {
        for (double s : acfg.s_grid) {
            if (s >= t_end) continue;
            for (const cvec& z : pts) {
                Trajectory tr = integrate_herglotz(dom, in->field, z, s, t_end, in->cfg);
                for (std::size_t k = 0; k < tr.times.size(); ++k) {
                    const double speed = norm2(in->field.eval(tr.states[k], tr.times[k]));
                    cell_sup[cell_of(tr.times[k])] =
                        std::max(cell_sup[cell_of(tr.times[k])], speed);
                }
            }
        }
    } else {
        const double delta = 1e-5;
        for (double s : acfg.s_grid) {
            for (const cvec& z : pts) {
                for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
                    const double a = std::max(knots[j], s), b = knots[j + 1];
                    if (b <= a) continue;
                    for (double xi : {a, 0.5 * (a + b), b - delta}) {
                        if (xi < s) continue;
                        const cvec p1 = ef.apply(s, xi, z);
                        const cvec p2 = ef.apply(s, xi + delta, z);
                        cell_sup[j] = std::max(cell_sup[j], dist2(p1, p2) / delta);
                    }
                }
            }
        }
    }
    double global_sup = 0.0;
    for (double v : cell_sup) global_sup = std::max(global_sup, v);
    rep.majorant.knots = knots;
    rep.majorant.values.resize(cell_sup.size());
    for (std::size_t j = 0; j < cell_sup.size(); ++j)
        rep.majorant.values[j] = 1.1 * (cell_sup[j] > 0.0 ? cell_sup[j] : global_sup);
    rep.majorant_lp = rep.majorant.lp_norm(rep.declared_order);
    rep.order_consistent = std::isfinite(rep.majorant_lp);

    // EF2 and EF3 over the audited grid
    for (double s : acfg.s_grid) {
        for (std::size_t zi = 0; zi < pts.size(); ++zi) {
            const cvec& z = pts[zi];
            std::vector<std::pair<double, cvec>> states;
            for (double u : U)
                if (u >= s) states.push_back({u, ef.apply(s, u, z)});

            for (std::size_t a = 0; a < states.size(); ++a) {
                for (std::size_t b = a + 1; b < states.size(); ++b) {
                    const double u = states[a].first, t = states[b].first;
                    // EF3
                    const double lhs = dist2(states[a].second, states[b].second);
                    const double slack = lhs - rep.majorant.integral(u, t);
                    if (slack > rep.ef3_worst) {
                        rep.ef3_worst = slack;
                        std::ostringstream os;
                        os << "s = " << s << ", u = " << u << ", t = " << t << ", point " << zi;
                        rep.ef3_witness = os.str();
                    }
                    // EF2: phi_{u,t} after phi_{s,u} against phi_{s,t}
                    const cvec through = ef.apply(u, t, states[a].second);
                    const double resid = kobayashi_distance(dom, through, states[b].second);
                    if (resid > rep.ef2_max) {
                        rep.ef2_max = resid;
                        std::ostringstream os;
                        os << "s = " << s << ", u = " << u << ", t = " << t << ", point " << zi;
                        rep.ef2_witness = os.str();
                    }
                }
            }
        }
    }
    return rep;
}

struct RecoveryResult {
    double s = 0.0;
    std::vector<int> n_ladder;
    std::vector<std::vector<cvec>> quotients;  // [ladder index][grid index]
    std::vector<cvec> extrapolated;            // Richardson from the two largest n
    std::vector<double> cauchy_sup;            // sup over grid between consecutive n
    bool first_order_consistent = true;
};

// Difference-quotient recovery of the field driving an evolution family:
// G_n(z) = n (phi_{s, s+1/n}(z) - z) along an increasing n ladder, with
// first-order Richardson extrapolation from the two largest n. The Cauchy
// increments certify the first-order assumption; they stop shrinking when it
// fails.
inline RecoveryResult recover_field(const EvolutionFamily& ef, double s,
                                    const std::vector<cvec>& grid, std::vector<int> n_ladder) {
    if (grid.empty()) throw PreconditionError("recover_field: empty grid");
    if (n_ladder.size() < 2) throw PreconditionError("recover_field: ladder needs at least two n");
    for (std::size_t i = 0; i < n_ladder.size(); ++i) {
        if (n_ladder[i] < 1 || (i > 0 && n_ladder[i] <= n_ladder[i - 1]))
            throw PreconditionError("recover_field: ladder must increase strictly from n >= 1");
    }
    if (!(s >= 0.0)) throw PreconditionError("recover_field: s must be >= 0");
    const int n_max = n_ladder.back();
    if (const auto* in = std::get_if<EvolutionFamily::Integrated>(&ef.source)) {
        for (std::size_t p = 1; p < in->field.pieces.size(); ++p) {
            const double b = in->field.pieces[p].t_start;
            if (std::abs(s - b) < 1.0 / n_max)
                throw RegularityPointError(
                    "recover_field: s is within 1/n_max of the switching time " +
                        std::to_string(b),
                    s);
        }
    }

    RecoveryResult out;
    out.s = s;
    out.n_ladder = n_ladder;
    for (int n : n_ladder) {
        std::vector<cvec> row;
        row.reserve(grid.size());
        for (const cvec& z : grid) {
            const cvec img = ef.apply(s, s + 1.0 / n, z);
            row.push_back(static_cast<double>(n) * (img - z));
        }
        out.quotients.push_back(std::move(row));
    }

    const std::size_t K = n_ladder.size() - 1;
    const double nK = n_ladder[K], nP = n_ladder[K - 1];
    out.extrapolated.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.extrapolated.push_back((1.0 / (nK - nP)) *
                                   (nK * out.quotients[K][i] - nP * out.quotients[K - 1][i]));
    }
    for (std::size_t j = 0; j + 1 < out.quotients.size(); ++j) {
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sup = std::max(sup, dist2(out.quotients[j + 1][i], out.quotients[j][i]));
        out.cauchy_sup.push_back(sup);
    }
    if (out.cauchy_sup.size() >= 2) {
        const double last = out.cauchy_sup.back();
        const double prev = out.cauchy_sup[out.cauchy_sup.size() - 2];
        out.first_order_consistent = last <= std::max(0.75 * prev, 1e-10);
    }
    return out;
}

// Integrates the field into an evolution family, recovers it back by
// difference quotients at each requested time, and compares.
inline Report roundtrip_check(const DomainModel& dom, const HerglotzField& G,
                              const std::vector<double>& s_list, const std::vector<cvec>& grid,
                              const std::vector<int>& n_ladder, const IntegratorConfig& cfg = {},
                              double tol = 1e-4) {
    G.validate();
    EvolutionFamily ef = EvolutionFamily::integrated(dom, G, cfg);
    Report rep;
    for (double s : s_list) {
        const RecoveryResult rec = recover_field(ef, s, grid, n_ladder);
        double sup = 0.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double e = dist2(rec.extrapolated[i], G.eval(grid[i], s));
            if (e > sup) {
                sup = e;
                worst_i = i;
            }
        }
        std::ostringstream name;
        name << "recover-at-s-" << s;
        std::ostringstream wit;
        wit << "worst grid point index " << worst_i;
        rep.add(name.str(), sup, tol, sup > tol ? wit.str() : std::string{});
    }
    return rep;
}

}  // namespace holoflow

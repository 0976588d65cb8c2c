// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.

#include <holoflow/builtins.hpp>
#include <holoflow/certify.hpp>
#include <holoflow/evolution.hpp>
#include <holoflow/flows.hpp>
#include <holoflow/scenario.hpp>

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace holoflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::duration<double>>(Clock::now() - t0).count();
}

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (!ok) detail << "; ";
            detail << what;
            ok = false;
        }
    }
    void require_close(double got, double want, double margin, const std::string& what) {
        if (!(std::abs(got - want) <= margin)) {
            std::ostringstream os;
            os << what << " (got " << got << ", want " << want << " +- " << margin << ")";
            require(false, os.str());
        }
    }
};

std::vector<cvec> sampled_grid(const DomainModel& dom, int count, double radius,
                               std::uint64_t seed, std::uint64_t stream_base) {
    std::vector<cvec> grid;
    for (int i = 0; i < count; ++i) {
        Rng rng(seed, stream_base + static_cast<std::uint64_t>(i));
        grid.push_back(dom.sample_inside(rng, radius));
    }
    return grid;
}

const DomainModel disc = DomainModel::disc();
const DomainModel ball2 = DomainModel::ball(2);

// ----- criteria -----

void criterion_distance(Checker& c) {
    const auto t0 = Clock::now();
    c.require_close(kobayashi_distance(disc, cvec1(0.0), cvec1(0.5)), std::atanh(0.5), 1e-9,
                    "radial distance anchor");
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Rng rng(2026, 0x600 + static_cast<std::uint64_t>(i));
        const cvec z = rng.in_ball(1, 0.75);
        cvec w = rng.in_ball(1, 0.75);
        int tries = 0;
        while (dist2(z, w) < 1e-3 && tries++ < 100) w = rng.in_ball(1, 0.75);
        const double lib = kobayashi_distance(disc, z, w);
        const double orc = oracles::disc_distance_polyline(z[0], w[0], 256);
        worst = std::max(worst, std::abs(lib - orc));
    }
    {
        std::ostringstream os;
        os << "polyline cross-check, worst gap " << worst;
        c.require(worst <= 1e-5, os.str());
    }
    const double elapsed = seconds_since(t0);
    c.require(elapsed <= 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
}

void criterion_certification(Checker& c) {
    const auto t0 = Clock::now();
    const char* generators[] = {"minus-z", "rotation", "tanh-field", "damped-tanh-mix"};
    const std::vector<cvec> grid = certification_grid(disc, 25, 7);
    for (const char* name : generators) {
        const HolomorphicField f = make_builtin_field(name);
        const GeneratorCertificate diss = certify_generator_dissipative(disc, f, 1000, 7);
        c.require(diss.verdict == Verdict::Generator,
                  std::string(name) + " dissipativity verdict");
        const GeneratorCertificate flow = certify_generator_flow(disc, f, 50.0, grid);
        c.require(flow.verdict == Verdict::Generator, std::string(name) + " flow verdict");
    }
    const HolomorphicField one = make_builtin_field("constant-one");
    const GeneratorCertificate diss = certify_generator_dissipative(disc, one, 1000, 7);
    c.require(diss.verdict == Verdict::NotGenerator, "constant field dissipativity verdict");
    const GeneratorCertificate flow = certify_generator_flow(disc, one, 50.0, grid);
    c.require(flow.verdict == Verdict::NotGenerator, "constant field flow verdict");
    c.require(flow.escape_witness.has_value(), "constant field escape witness");
    if (flow.escape_witness) {
        c.require(norm2(flow.escape_witness->first) == 0.0,
                  "escape witness starts at the origin");
        c.require_close(flow.escape_witness->second, 1.0, 1e-6, "escape time from the origin");
    }
    const double elapsed = seconds_since(t0);
    c.require(elapsed <= 60.0, "runtime " + std::to_string(elapsed) + "s exceeds 60s");
}

void criterion_flow_anchor(Checker& c) {
    const cvec end = semigroup_map(disc, make_builtin_field("tanh-field"), 1.0, cvec1(0.0));
    c.require_close(end[0].real(), std::tanh(1.0), 1e-8, "flow value at the origin");
    c.require_close(end[0].imag(), 0.0, 1e-8, "flow value stays real");
}

void criterion_product_formula(Checker& c) {
    const std::vector<cvec> grid = sampled_grid(disc, 10, 0.8, 2026, 0xa00);
    const ConvergenceTable shrink = product_formula_convergence(
        disc, make_builtin_family("shrink"), 1.0, {64, 128, 256, 512, 1024}, grid,
        make_builtin_field("minus-z"));
    for (std::size_t j = 0; j + 1 < shrink.sup_error.size(); ++j) {
        const double ratio = shrink.sup_error[j + 1] / shrink.sup_error[j];
        std::ostringstream os;
        os << "halving ratio at m = " << shrink.m[j] << " is " << ratio;
        c.require(ratio >= 0.35 && ratio <= 0.65, os.str());
    }
    const HolomorphicField tanh_f = make_builtin_field("tanh-field");
    const ConvergenceTable euler =
        product_formula_convergence(disc, euler_family(tanh_f), 1.0, {512}, grid, tanh_f);
    {
        std::ostringstream os;
        os << "euler error at m = 512 is " << euler.sup_error.back();
        c.require(euler.sup_error.back() <= 3e-3, os.str());
    }
}

void criterion_trotter(Checker& c) {
    IntegratorConfig tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const HolomorphicField contraction = make_builtin_field("minus-z");
    const HolomorphicField rotation = make_builtin_field("rotation");
    const HolomorphicField tanh_f = make_builtin_field("tanh-field");

    const std::vector<cvec> grid = sampled_grid(disc, 10, 0.8, 2026, 0xb00);
    const double t = 0.5;
    const cplx factor = std::exp(cplx(-1.0, 1.0) * t);
    for (int m : {1, 2, 4, 8, 16, 32, 64}) {
        const std::vector<cvec> mapped =
            trotter_sum(disc, contraction, rotation, t, m, grid, tight);
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sup = std::max(sup, std::abs(mapped[i][0] - factor * grid[i][0]));
        std::ostringstream os;
        os << "commuting splitting error " << sup << " at m = " << m;
        c.require(sup <= 1e-10, os.str());
    }

    const std::vector<cvec> grid5 = sampled_grid(disc, 10, 0.5, 2026, 0xb10);
    const ConvergenceTable conv =
        trotter_convergence(disc, contraction, tanh_f, 1.0, {64, 128, 256, 512, 1024}, grid5);
    for (std::size_t j = 0; j + 1 < conv.sup_error.size(); ++j) {
        const double ratio = conv.sup_error[j + 1] / conv.sup_error[j];
        std::ostringstream os;
        os << "noncommuting halving ratio at m = " << conv.m[j] << " is " << ratio;
        c.require(ratio >= 0.35 && ratio <= 0.65, os.str());
    }
}

void criterion_nonautonomous(Checker& c) {
    const HerglotzField aging = make_builtin_herglotz("aging-contraction");
    const cvec end = solve_loewner_ode(disc, aging, 0.0, 1.0, cvec1(0.5));
    c.require_close(end[0].real(), 0.5 * std::exp(-1.5), 1e-8, "nonautonomous solve anchor");

    EFAuditConfig acfg;
    acfg.s_grid = {0.0, 0.4, 0.8, 1.2};
    acfg.t_grid = {0.3, 0.7, 1.1, 1.5};
    acfg.compact_radius = 0.5;
    acfg.points = 4;
    acfg.seed = 2026;
    const EFReport rep = audit_evolution_family(EvolutionFamily::integrated(disc, aging), acfg);
    {
        std::ostringstream os;
        os << "composition residual " << rep.ef2_max;
        c.require(rep.ef2_max <= 1e-8, os.str());
    }
}

void criterion_recovery(Checker& c) {
    const std::vector<int> ladder = {16, 64, 256, 1024, 4096};
    const Report rt =
        roundtrip_check(disc, make_builtin_herglotz("aging-contraction"),
                        {0.2, 0.5, 0.9, 1.3, 1.7}, sampled_grid(disc, 20, 0.5, 2026, 0xacc0),
                        ladder);
    for (const CheckItem& item : rt.items) {
        std::ostringstream os;
        os << item.name << " residual " << item.residual;
        c.require(item.pass, os.str());
    }
    const RecoveryResult rec = recover_field(
        EvolutionFamily::integrated(disc, make_builtin_herglotz("steady-tanh")), 0.5,
        {cvec1(0.0)}, ladder);
    c.require_close(rec.extrapolated[0][0].real(), 1.0, 1e-6, "recovered value at the origin");
}

void criterion_contraction(Checker& c) {
    std::vector<double> t_grid;
    for (int k = 0; k <= 8; ++k) t_grid.push_back(0.25 * k);
    const struct {
        const char* name;
        const DomainModel& dom;
        int dim;
    } cases[] = {
        {"minus-z", disc, 1},         {"rotation", disc, 1}, {"tanh-field", disc, 1},
        {"bp-cayley", disc, 1},       {"spiral", ball2, 2},  {"damped-tanh-mix", disc, 1},
    };
    for (const auto& cs : cases) {
        const Report rep = contraction_audit(cs.dom, make_builtin_field(cs.name, cs.dim),
                                             t_grid, 500, 11);
        std::ostringstream os;
        os << cs.name << " contraction violations " << rep.violations();
        c.require(rep.violations() == 0, os.str());
    }
}

void criterion_norm_bound(Checker& c) {
    const struct {
        const char* name;
        const DomainModel& dom;
        int dim;
    } cases[] = {
        {"minus-z", disc, 1},  {"rotation", disc, 1},  {"tanh-field", disc, 1},
        {"bp-cayley", disc, 1}, {"damped-tanh-mix", disc, 1},
        {"minus-z", ball2, 2}, {"rotation", ball2, 2}, {"spiral", ball2, 2},
    };
    for (const auto& cs : cases) {
        const HolomorphicField f = make_builtin_field(cs.name, cs.dim);
        const GeneratorCertificate cert = certify_generator_dissipative(cs.dom, f, 200, 13);
        c.require(cert.verdict == Verdict::Generator,
                  std::string(cs.name) + " dissipativity precheck");
        if (cert.verdict != Verdict::Generator) continue;
        const Report rep = check_norm_bound(cs.dom, f, cert, 2000, 13);
        std::ostringstream os;
        os << cs.name << " growth bound residual " << rep.items.front().residual;
        c.require(rep.pass(), os.str());
    }

    c.require_close(numerical_radius(CMat::diagonal({cplx(1.0, 0.0), cplx(-2.0, 0.0)})), 2.0,
                    1e-6, "numerical radius of diag(1,-2)");
    CMat jordan(2);
    jordan(0, 1) = 1.0;
    const double lib = numerical_radius(jordan);
    c.require_close(lib, 0.5, 1e-3, "numerical radius of the nilpotent Jordan block");
    c.require_close(lib, oracles::numerical_radius_grid_2d(jordan), 1e-3,
                    "numerical radius against the dense sphere grid");
}

void criterion_cone(Checker& c) {
    std::vector<HolomorphicField> pool;
    for (const char* name : {"minus-z", "rotation", "tanh-field", "bp-cayley", "damped-tanh-mix"})
        pool.push_back(make_builtin_field(name));
    const std::vector<cvec> flow_grid = certification_grid(disc, 5, 17);

    auto weights_for = [](int combo) {
        Rng rng(20260819, 0xc0e + static_cast<std::uint64_t>(combo));
        std::vector<double> w;
        for (std::size_t i = 0; i < 5; ++i) w.push_back(rng.uniform(0.0, 2.0));
        return w;
    };

    for (int combo = 0; combo < 20; ++combo) {
        const HolomorphicField f = cone_combine(pool, weights_for(combo));
        const GeneratorCertificate diss = certify_generator_dissipative(disc, f, 400, 17);
        const GeneratorCertificate flow = certify_generator_flow(disc, f, 10.0, flow_grid);
        std::ostringstream os;
        os << "combination " << combo << " verdicts " << verdict_name(diss.verdict) << "/"
           << verdict_name(flow.verdict);
        c.require(diss.verdict == Verdict::Generator && flow.verdict == Verdict::Generator,
                  os.str());
    }

    for (int combo : {0, 7, 13}) {
        const HolomorphicField f = cone_combine(pool, weights_for(combo));
        const Verdict base = certify_generator_dissipative(disc, f, 400, 17).verdict;
        for (double lambda : {0.25, 4.0}) {
            const HolomorphicField scaled = cone_combine({f}, {lambda});
            const Verdict v = certify_generator_dissipative(disc, scaled, 400, 17).verdict;
            std::ostringstream os;
            os << "scaling combination " << combo << " by " << lambda << " flips "
               << verdict_name(base) << " to " << verdict_name(v);
            c.require(v == base, os.str());
        }
    }
    const HolomorphicField one = make_builtin_field("constant-one");
    const Verdict base = certify_generator_dissipative(disc, one, 400, 17).verdict;
    for (double lambda : {0.25, 4.0}) {
        const Verdict v =
            certify_generator_dissipative(disc, cone_combine({one}, {lambda}), 400, 17).verdict;
        c.require(v == base, "scaling a non-generator must not flip its verdict");
    }
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + HOLOFLOW_CLI_PATH + "\" " + args +
                            " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void criterion_scenarios(Checker& c) {
    const fs::path root = fs::temp_directory_path() / "holoflow-acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    auto scen = [](const char* name) {
        return std::string(HOLOFLOW_SCENARIO_DIR) + "/" + name;
    };

    const struct {
        const char* file;
        int expected;
    } exemplars[] = {
        {"certify_tanh_field.json", 0},
        {"certify_constant_field.json", 1},
        {"malformed_field.json", 2},
    };
    for (const auto& ex : exemplars) {
        const fs::path out1 = root / (std::string(ex.file) + ".run1");
        const fs::path out2 = root / (std::string(ex.file) + ".run2");
        const int rc1 = run_cli("run " + scen(ex.file) + " --out " + out1.string() + " --quiet");
        const int rc2 = run_cli("run " + scen(ex.file) + " --out " + out2.string() + " --quiet");
        {
            std::ostringstream os;
            os << ex.file << " exit codes " << rc1 << "/" << rc2 << ", expected " << ex.expected;
            c.require(rc1 == ex.expected && rc2 == ex.expected, os.str());
        }
        std::ifstream r1(out1 / "report.json"), r2(out2 / "report.json");
        c.require(r1.good() && r2.good(), std::string(ex.file) + " wrote report.json");
        if (r1.good() && r2.good()) {
            const json j1 = json::parse(r1), j2 = json::parse(r2);
            c.require(j1["verdicts"] == j2["verdicts"],
                      std::string(ex.file) + " verdicts identical across reruns");
            c.require(j1["exit_code"] == j2["exit_code"],
                      std::string(ex.file) + " recorded exit codes identical");
        }
    }

    const fs::path fout1 = root / "flow.run1";
    const fs::path fout2 = root / "flow.run2";
    const int f1 = run_cli("run " + scen("flow_tanh.json") + " --out " + fout1.string() +
                           " --quiet");
    const int f2 = run_cli("run " + scen("flow_tanh.json") + " --out " + fout2.string() +
                           " --quiet");
    c.require(f1 == 0 && f2 == 0, "flow scenario exits 0");
    const std::string csv1 = slurp(fout1 / "data.csv");
    const std::string csv2 = slurp(fout2 / "data.csv");
    c.require(!csv1.empty() && csv1 == csv2, "trajectory data byte-identical across reruns");

    c.require(run_cli("list-builtins") == 0, "list-builtins exits 0");
}

}  // namespace

int main() {
    const struct {
        const char* name;
        std::function<void(Checker&)> fn;
    } criteria[] = {
        {"hyperbolic distance anchor and polyline cross-check", criterion_distance},
        {"generator certification separates fields by verdict", criterion_certification},
        {"autonomous flow anchor", criterion_flow_anchor},
        {"product formula first-order convergence", criterion_product_formula},
        {"splitting of commuting and noncommuting fields", criterion_trotter},
        {"nonautonomous solve anchor and composition audit", criterion_nonautonomous},
        {"field recovery roundtrip", criterion_recovery},
        {"distance contraction along generator flows", criterion_contraction},
        {"numerical range growth bound", criterion_norm_bound},
        {"cone combinations stay generators under scaling", criterion_cone},
        {"scenario exit codes and reproducibility", criterion_scenarios},
    };

    int passed = 0;
    int index = 0;
    for (const auto& cr : criteria) {
        ++index;
        Checker c;
        try {
            cr.fn(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        if (c.ok) {
            ++passed;
            std::cout << "PASS criterion " << index << ": " << cr.name << "\n";
        } else {
            std::cout << "FAIL criterion " << index << ": " << cr.name << " - "
                      << c.detail.str() << "\n";
        }
    }
    std::cout << passed << "/" << index << " criteria passed\n";
    return passed == index ? 0 : 1;
}

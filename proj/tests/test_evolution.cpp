#include <catch2/catch_amalgamated.hpp>

#include <holoflow/builtins.hpp>
#include <holoflow/evolution.hpp>

#include <cmath>
#include <thread>

using Catch::Approx;
using namespace holoflow;

namespace {
const DomainModel disc = DomainModel::disc();

std::vector<cvec> disc_grid(int count, double radius, std::uint64_t seed) {
    std::vector<cvec> grid;
    for (int i = 0; i < count; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        grid.push_back(rng.in_ball(1, radius));
    }
    return grid;
}
}  // namespace

TEST_CASE("time-dependent fields validate structure and evaluate pieces") {
    HerglotzField empty;
    CHECK_THROWS_AS(empty.validate(), PreconditionError);

    HerglotzField late;
    late.pieces.push_back(HerglotzPiece{0.5, make_builtin_field("minus-z"), {1.0}});
    CHECK_THROWS_AS(late.validate(), PreconditionError);

    HerglotzField unsorted;
    unsorted.pieces.push_back(HerglotzPiece{0.0, make_builtin_field("minus-z"), {1.0}});
    unsorted.pieces.push_back(HerglotzPiece{0.0, make_builtin_field("rotation"), {1.0}});
    CHECK_THROWS_AS(unsorted.validate(), PreconditionError);

    HerglotzField low_order = autonomous_herglotz(make_builtin_field("minus-z"));
    low_order.order_d = 0.5;
    CHECK_THROWS_AS(low_order.validate(), PreconditionError);

    const HerglotzField aging = make_builtin_herglotz("aging-contraction");
    CHECK(aging.order_d == 2.0);
    CHECK(aging.eval(cvec1(0.4), 1.5)[0].real() == Approx(-(1.0 + 1.5) * 0.4).margin(1e-15));

    const HerglotzField pw = make_builtin_herglotz("piecewise-demo");
    CHECK(pw.piece_index(0.5) == 0);
    CHECK(pw.piece_index(1.0) == 1);
    CHECK(pw.breaks_between(0.0, 2.0) == std::vector<double>{1.0});
    CHECK(pw.breaks_between(1.0, 2.0).empty());
}

TEST_CASE("nonautonomous solve anchors") {
    const HerglotzField aging = make_builtin_herglotz("aging-contraction");
    CHECK(solve_loewner_ode(disc, aging, 0.0, 1.0, cvec1(0.5))[0].real() ==
          Approx(0.5 * std::exp(-1.5)).margin(1e-9));
    CHECK(solve_loewner_ode(disc, aging, 0.5, 0.5, cvec1(0.3))[0].real() == Approx(0.3));

    const HerglotzField pw = make_builtin_herglotz("piecewise-demo");
    const cvec end = solve_loewner_ode(disc, pw, 0.0, 2.0, cvec1(0.5));
    CHECK(end[0].real() == Approx(0.09938305517320649).margin(1e-8));
    CHECK(end[0].imag() == Approx(0.15477993782655610).margin(1e-8));

    const cvec late = solve_loewner_ode(disc, pw, 1.5, 2.0, cvec1(0.3));
    CHECK(late[0].real() == Approx(0.3 * std::cos(0.5)).margin(1e-9));
    CHECK(late[0].imag() == Approx(0.3 * std::sin(0.5)).margin(1e-9));

    CHECK_THROWS_AS(solve_loewner_ode(disc, aging, 1.0, 0.5, cvec1(0.3)), PreconditionError);
    CHECK_THROWS_AS(solve_loewner_ode(disc, aging, 0.0, 1.0, cvec1(1.1)), DomainViolationError);
}

TEST_CASE("a non-herglotz piece is reported with its index and escape time") {
    HerglotzField bad;
    bad.pieces.push_back(HerglotzPiece{0.0, make_builtin_field("minus-z"), {1.0}});
    bad.pieces.push_back(HerglotzPiece{0.5, make_builtin_field("constant-one"), {1.0}});
    bool caught = false;
    try {
        solve_loewner_ode(disc, bad, 0.0, 3.0, cvec1(0.8));
    } catch (const NonGeneratorPieceError& e) {
        caught = true;
        CHECK(e.piece == 1);
        CHECK(e.escape_time == Approx(0.5 + 1.0 - 0.8 * std::exp(-0.5)).margin(1e-6));
    }
    CHECK(caught);
}

TEST_CASE("integrated evolution families reuse cached branches consistently") {
    EvolutionFamily ef =
        EvolutionFamily::integrated(disc, make_builtin_herglotz("steady-tanh"));
    const cvec z = cvec1(cplx(0.2, 0.1));
    CHECK(dist2(ef.apply(0.3, 0.3, z), z) == 0.0);

    const cvec mid = ef.apply(0.0, 0.5, z);
    const cvec extended = ef.apply(0.0, 1.0, z);
    const cvec direct =
        solve_loewner_ode(disc, make_builtin_herglotz("steady-tanh"), 0.0, 1.0, z);
    CHECK(dist2(extended, direct) <= 1e-8);
    CHECK(dist2(ef.apply(0.0, 0.5, z), mid) == 0.0);

    EvolutionFamily copy = ef;
    CHECK(dist2(copy.apply(0.0, 1.0, z), extended) == 0.0);

    CHECK_THROWS_AS(ef.apply(-0.1, 0.5, z), PreconditionError);
    CHECK_THROWS_AS(ef.apply(0.5, 0.4, z), PreconditionError);
}

TEST_CASE("audits pass for honest families") {
    EFAuditConfig quick;
    quick.s_grid = {0.0, 0.5, 1.0};
    quick.t_grid = {0.25, 0.75, 1.25};
    quick.points = 4;

    SECTION("identity closed form") {
        const EFReport rep = audit_evolution_family(make_builtin_ef("ef-identity"), quick);
        CHECK(rep.ef1_max == 0.0);
        CHECK(rep.ef2_max == 0.0);
        CHECK(rep.ef3_worst <= 0.0);
        CHECK(rep.order_consistent);
        CHECK(rep.to_report(quick).pass());
    }

    SECTION("aging closed form with declared order") {
        const EFReport rep = audit_evolution_family(make_builtin_ef("ef-aging"), quick);
        CHECK(rep.ef2_max <= 1e-10);
        CHECK(rep.declared_order == 2.0);
        CHECK(rep.order_consistent);
        CHECK(rep.to_report(quick).pass());
    }

    SECTION("integrated steady field") {
        const EFReport rep = audit_evolution_family(
            EvolutionFamily::integrated(disc, make_builtin_herglotz("steady-tanh")), quick);
        CHECK(rep.ef1_max == 0.0);
        CHECK(rep.ef2_max <= 1e-8);
        CHECK(rep.to_report(quick).pass());
    }

    SECTION("integrated piecewise field") {
        const EFReport rep = audit_evolution_family(
            EvolutionFamily::integrated(disc, make_builtin_herglotz("piecewise-demo")), quick);
        CHECK(rep.ef2_max <= 1e-8);
        CHECK(rep.to_report(quick).pass());
    }
}

TEST_CASE("audit flags a family violating the composition identity") {
    EvolutionFamily broken = EvolutionFamily::closed(
        disc, "broken", [](double s, double t, const cvec& z) {
            return axpy(std::exp(-(t - s)) * z, 0.01 * (t - s), cvec1(1.0));
        });
    EFAuditConfig quick;
    quick.s_grid = {0.0, 0.5};
    quick.t_grid = {0.5, 1.0, 2.0};
    quick.points = 3;
    const EFReport rep = audit_evolution_family(broken, quick);
    CHECK(rep.ef2_max > 1e-4);
    CHECK_FALSE(rep.to_report(quick).pass());
    CHECK_FALSE(rep.ef2_witness.empty());
}

TEST_CASE("field recovery from closed forms") {
    const std::vector<int> ladder = {16, 64, 256, 1024};
    const std::vector<cvec> grid = {cvec1(0.2), cvec1(cplx(-0.3, 0.1)), cvec1(cplx(0.0, 0.4))};

    SECTION("exponential family recovers -z") {
        const RecoveryResult rec = recover_field(make_builtin_ef("ef-exp"), 0.25, grid, ladder);
        CHECK(rec.first_order_consistent);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(dist2(rec.extrapolated[i], -1.0 * grid[i]) <= 1e-6);
        REQUIRE(rec.cauchy_sup.size() == 3);
        CHECK(rec.cauchy_sup[2] < rec.cauchy_sup[1]);
    }

    SECTION("identity family recovers the zero field") {
        const RecoveryResult rec =
            recover_field(make_builtin_ef("ef-identity"), 0.1, grid, ladder);
        CHECK(rec.first_order_consistent);
        for (const cvec& g : rec.extrapolated) CHECK(norm2(g) == 0.0);
    }

    SECTION("tanh flow recovers value one at the origin") {
        const RecoveryResult rec =
            recover_field(make_builtin_ef("ef-tanh"), 0.0, {cvec1(0.0)}, {16, 64, 256, 1024, 4096});
        CHECK(rec.extrapolated[0][0].real() == Approx(1.0).margin(1e-6));
    }

    SECTION("ladder validation") {
        CHECK_THROWS_AS(recover_field(make_builtin_ef("ef-exp"), 0.1, grid, {16}),
                        PreconditionError);
        CHECK_THROWS_AS(recover_field(make_builtin_ef("ef-exp"), 0.1, grid, {16, 16}),
                        PreconditionError);
        CHECK_THROWS_AS(recover_field(make_builtin_ef("ef-exp"), 0.1, {}, ladder),
                        PreconditionError);
    }
}

TEST_CASE("recovery refuses non-regular times of integrated families") {
    EvolutionFamily ef =
        EvolutionFamily::integrated(disc, make_builtin_herglotz("piecewise-demo"));
    CHECK_THROWS_AS(recover_field(ef, 1.0 - 1e-5, {cvec1(0.2)}, {16, 64, 256, 1024, 4096}),
                    RegularityPointError);
    CHECK_NOTHROW(recover_field(ef, 0.5, {cvec1(0.2)}, {16, 64, 256, 1024}));
}

TEST_CASE("recovery notices when the family is not first-order differentiable") {
    EvolutionFamily rough = EvolutionFamily::closed(
        disc, "rough", [](double s, double t, const cvec& z) {
            return std::exp(-std::sqrt(t - s)) * z;
        });
    const RecoveryResult rec = recover_field(rough, 0.0, {cvec1(0.4)}, {4, 16, 64, 256});
    CHECK_FALSE(rec.first_order_consistent);
}

TEST_CASE("roundtrip recovery reproduces the driving field") {
    const Report rep =
        roundtrip_check(disc, make_builtin_herglotz("aging-contraction"), {0.3, 0.8},
                        disc_grid(6, 0.5, 26), {16, 64, 256, 1024});
    REQUIRE(rep.items.size() == 2);
    CHECK(rep.pass());
}

TEST_CASE("concurrent queries against one cached family stay consistent") {
    EvolutionFamily ef =
        EvolutionFamily::integrated(disc, make_builtin_herglotz("steady-tanh"));
    const std::vector<cvec> pts = disc_grid(4, 0.5, 27);
    const std::vector<double> times = {0.25, 0.5, 0.75, 1.0, 1.5};

    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&ef, &pts, &times] {
            for (const cvec& z : pts)
                for (double t : times) (void)ef.apply(0.0, t, z);
        });
    }
    for (auto& th : workers) th.join();

    EvolutionFamily fresh =
        EvolutionFamily::integrated(disc, make_builtin_herglotz("steady-tanh"));
    for (const cvec& z : pts)
        for (double t : times) CHECK(dist2(ef.apply(0.0, t, z), fresh.apply(0.0, t, z)) <= 1e-8);
}

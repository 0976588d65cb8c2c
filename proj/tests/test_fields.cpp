#include <catch2/catch_amalgamated.hpp>

#include <holoflow/builtins.hpp>
#include <holoflow/fields.hpp>

#include "oracles.hpp"

#include <cmath>

using Catch::Approx;
using namespace holoflow;

namespace {
const DomainModel disc = DomainModel::disc();

double field_gap(const HolomorphicField& a, const HolomorphicField& b, int samples = 40) {
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        Rng rng(31, static_cast<std::uint64_t>(i));
        const cvec z = rng.in_ball(a.dim(), 0.9);
        worst = std::max(worst, dist2(a.eval(z), b.eval(z)));
    }
    return worst;
}
}  // namespace

TEST_CASE("linear and polynomial evaluation anchors") {
    const HolomorphicField spiral = make_builtin_field("spiral");
    const cvec v = spiral.eval({cplx(0.3, 0.0), cplx(0.0, 0.2)});
    CHECK(v[0].real() == Approx(-0.3).margin(1e-15));
    CHECK(v[0].imag() == Approx(0.0).margin(1e-15));
    CHECK(v[1].real() == Approx(-0.2).margin(1e-15));
    CHECK(v[1].imag() == Approx(-0.4).margin(1e-15));

    const HolomorphicField tanh_field = make_builtin_field("tanh-field");
    CHECK(tanh_field.eval(cvec1(0.5))[0].real() == Approx(0.75).margin(1e-15));
    CHECK(tanh_field.eval(cvec1(cplx(0.0, 0.5)))[0].real() == Approx(1.25).margin(1e-15));

    const HolomorphicField mix = make_builtin_field("damped-tanh-mix");
    CHECK(mix.eval(cvec1(0.5))[0].real() == Approx(0.375).margin(1e-14));
}

TEST_CASE("field constructors validate their inputs") {
    CHECK_THROWS_AS(linear_field(CMat{}), InvalidFieldError);
    PolynomialField bad;
    bad.dim = 2;
    bad.components.resize(1);
    CHECK_THROWS_AS(polynomial_field(bad), InvalidFieldError);
    PolynomialField bad2;
    bad2.dim = 1;
    bad2.components = {{Monomial{{1, 2}, cplx(1.0, 0.0)}}};
    CHECK_THROWS_AS(polynomial_field(bad2), InvalidFieldError);
    CHECK_THROWS_AS(make_builtin_field("no-such-field"), InvalidFieldError);
    CHECK_THROWS_AS(make_builtin_field("tanh-field", 2), InvalidFieldError);
}

TEST_CASE("checked evaluation enforces domain membership and dimension") {
    const HolomorphicField f = make_builtin_field("minus-z");
    CHECK_THROWS_AS(evaluate(disc, f, cvec1(1.2)), DomainViolationError);
    CHECK_THROWS_AS(evaluate(DomainModel::ball(2), f, cvec1(0.1)), PreconditionError);
    CHECK(evaluate(disc, f, cvec1(0.25))[0].real() == Approx(-0.25));
}

TEST_CASE("herglotz numerator check accepts Cayley and rejects negative real part") {
    RationalPoly cayley;
    cayley.num = {cplx(1.0, 0.0), cplx(1.0, 0.0)};
    cayley.den = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
    const auto good = check_herglotz_numerator(cayley, 256);
    CHECK(good.pass);
    CHECK(good.min_real >= -1e-12);

    RationalPoly negative;
    negative.num = {cplx(0.0, 0.0), cplx(1.0, 0.0)};  // p(z) = z
    const auto bad = check_herglotz_numerator(negative, 256);
    CHECK_FALSE(bad.pass);
    CHECK(bad.min_real < -0.9);
    CHECK_THROWS_AS(berkson_porta(cplx(1.0, 0.0), negative), InvalidFieldError);
    CHECK_THROWS_AS(berkson_porta(cplx(1.5, 0.0), cayley), InvalidFieldError);
}

TEST_CASE("the Cayley construction reproduces the tanh field") {
    const HolomorphicField bp = make_builtin_field("bp-cayley");
    const HolomorphicField tanh_field = make_builtin_field("tanh-field");
    CHECK(field_gap(bp, tanh_field) <= 1e-12);
}

TEST_CASE("polynomial expansion covers linear and divisible rational fields") {
    const PolynomialField lin = to_polynomial(make_builtin_field("spiral"));
    CHECK(lin.dim == 2);
    const HolomorphicField relin = polynomial_field(lin);
    CHECK(field_gap(relin, make_builtin_field("spiral")) <= 1e-14);

    const PolynomialField expanded = to_polynomial(make_builtin_field("bp-cayley"));
    CHECK(field_gap(HolomorphicField{expanded}, make_builtin_field("tanh-field")) <= 1e-12);

    RationalPoly truly_rational;
    truly_rational.num = {cplx(1.0, 0.0)};
    truly_rational.den = {cplx(2.0, 0.0), cplx(1.0, 0.0)};  // 1 / (2 + z)
    const HolomorphicField bp = berkson_porta(cplx(1.0, 0.0), truly_rational);
    CHECK_THROWS_AS(to_polynomial(bp), InvalidFieldError);
}

TEST_CASE("cone combinations expand and validate") {
    const HolomorphicField minus_z = make_builtin_field("minus-z");
    const HolomorphicField tanh_field = make_builtin_field("tanh-field");

    const HolomorphicField mix = cone_combine({minus_z, tanh_field}, {0.3, 0.7});
    CHECK(field_gap(mix, make_builtin_field("damped-tanh-mix")) <= 1e-14);
    CHECK(mix.eval(cvec1(0.5))[0].real() == Approx(0.375).margin(1e-14));

    const HolomorphicField same = cone_combine({tanh_field}, {1.0});
    CHECK(field_gap(same, tanh_field) <= 1e-14);

    const HolomorphicField with_cayley =
        cone_combine({make_builtin_field("bp-cayley"), minus_z}, {0.5, 0.5});
    CHECK(with_cayley.eval(cvec1(0.4))[0].real() == Approx(0.5 * (1 - 0.16) - 0.5 * 0.4).margin(1e-12));

    const HolomorphicField zero = cone_combine({minus_z, tanh_field}, {0.0, 0.0});
    CHECK(norm2(zero.eval(cvec1(0.3))) == 0.0);

    CHECK_THROWS_AS(cone_combine({}, {}), PreconditionError);
    CHECK_THROWS_AS(cone_combine({minus_z}, {1.0, 2.0}), PreconditionError);
    CHECK_THROWS_AS(cone_combine({minus_z, tanh_field}, {1.0, -0.1}), InvalidWeightError);
    CHECK_THROWS_AS(cone_combine({minus_z, make_builtin_field("spiral")}, {1.0, 1.0}),
                    PreconditionError);
}

TEST_CASE("linear part analysis is exact for polynomial fields") {
    const LinearPartAnalysis tanh_part = analyze_linear_part(make_builtin_field("tanh-field"));
    CHECK(tanh_part.value_at_zero[0].real() == Approx(1.0).margin(1e-15));
    CHECK(std::abs(tanh_part.jacobian(0, 0)) <= 1e-15);
    CHECK(tanh_part.numerical_radius <= 1e-12);

    const LinearPartAnalysis spiral_part = analyze_linear_part(make_builtin_field("spiral"));
    CHECK(norm2(spiral_part.value_at_zero) <= 1e-15);
    CHECK(spiral_part.numerical_radius == Approx(std::sqrt(5.0)).margin(1e-9));

    const LinearPartAnalysis mix_part = analyze_linear_part(make_builtin_field("damped-tanh-mix"));
    CHECK(mix_part.value_at_zero[0].real() == Approx(0.7).margin(1e-15));
    CHECK(mix_part.jacobian(0, 0).real() == Approx(-0.3).margin(1e-14));
}

TEST_CASE("linear part analysis differentiates non-polynomial fields numerically") {
    RationalPoly truly_rational;
    truly_rational.num = {cplx(1.0, 0.0)};
    truly_rational.den = {cplx(2.0, 0.0), cplx(1.0, 0.0)};
    const HolomorphicField bp = berkson_porta(cplx(1.0, 0.0), truly_rational);
    // H(z) = (1-z)^2 / (2+z); H(0) = 1/2, H'(0) = -2/2 - 1/4 = -5/4
    const LinearPartAnalysis part = analyze_linear_part(bp);
    CHECK(part.value_at_zero[0].real() == Approx(0.5).margin(1e-12));
    CHECK(part.jacobian(0, 0).real() == Approx(-1.25).margin(1e-9));
}

TEST_CASE("numerical radius anchors and determinism") {
    CHECK(numerical_radius(CMat::diagonal({cplx(1.0, 0.0), cplx(-2.0, 0.0)})) ==
          Approx(2.0).margin(1e-6));

    CMat jordan(2);
    jordan(0, 1) = 1.0;
    const double lib = numerical_radius(jordan);
    CHECK(lib == Approx(0.5).margin(1e-3));
    CHECK(lib == Approx(oracles::numerical_radius_grid_2d(jordan)).margin(1e-3));

    CHECK(numerical_radius(jordan, 512, 77) == numerical_radius(jordan, 512, 77));
    CHECK(numerical_radius(CMat::scaled_identity(1, cplx(0.0, 1.0))) == Approx(1.0).margin(1e-12));
}

TEST_CASE("builtin catalogs resolve to constructible objects") {
    for (const auto& e : builtin_field_catalog()) CHECK_NOTHROW(make_builtin_field(e.name));
    for (const auto& e : builtin_herglotz_catalog()) CHECK_NOTHROW(make_builtin_herglotz(e.name));
    for (const auto& e : builtin_ef_catalog()) CHECK_NOTHROW(make_builtin_ef(e.name));
    CHECK_NOTHROW(make_builtin_family("shrink"));
    CHECK_THROWS_AS(make_builtin_family("no-such-family"), InvalidFieldError);
}

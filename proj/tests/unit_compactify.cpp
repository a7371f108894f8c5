#include <doctest.h>

#include <cmath>

#include "essstab/compactify.hpp"
#include "essstab/util.hpp"

using namespace essstab;

namespace {

EssField mp_field() {
    Poly2 f, g;
    f.set(0, 0, -1.0);
    f.set(0, 1, 2.0);
    g.set(0, 0, 1.0);
    g.set(1, 0, -2.0);
    return build_field(f, g, 1);
}

EssField random_field(SplitMix64& rng, int d) {
    Poly2 f, g;
    for (int total = 0; total <= d; ++total)
        for (int i = 0; i <= total; ++i) {
            f.set(i, total - i, rng.uniform(-1.0, 1.0));
            g.set(i, total - i, rng.uniform(-1.0, 1.0));
        }
    return build_field(f, g, d);
}

}  // namespace

TEST_CASE("infinity polynomial closed forms") {
    // matching pennies: F(u) = -4u^2
    const Poly1 F = infinity_polynomial(mp_field(), Chart::U1);
    CHECK(F.degree() == 2);
    CHECK(F.coeff(2) == -4.0);
    CHECK(F.coeff(1) == 0.0);
    CHECK(F.coeff(0) == 0.0);

    // f = 1 + x, g = 1 + y: top parts f_1 = x, g_1 = y, so
    // F(u) = u(u*u - 1) = u^3 - u and G(u) = u(u*u - 1) as well
    const EssField X = build_field(Poly2::constant(1) + Poly2::var_x(),
                                   Poly2::constant(1) + Poly2::var_y(), 1);
    const Poly1 F2 = infinity_polynomial(X, Chart::U1);
    CHECK(F2.coeff(3) == 1.0);
    CHECK(F2.coeff(1) == -1.0);
    CHECK(F2.coeff(0) == 0.0);
    CHECK(F2.coeff(2) == 0.0);

    // u = 0 is a structural root in every chart
    SplitMix64 rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        const EssField Y = random_field(rng, 3);
        CHECK(infinity_polynomial(Y, Chart::U1).coeff(0) == 0.0);
        CHECK(infinity_polynomial(Y, Chart::U2).coeff(0) == 0.0);
    }
}

TEST_CASE("chart fields") {
    const EssField X = mp_field();
    const ChartField c1 = chart_field(X, Chart::U1);
    CHECK(c1.n == 3);

    // equator invariance: dv carries a factor v in every term
    for (const auto& [m, c] : c1.dv.terms()) CHECK(m.j >= 1);

    // the restriction of du to v = 0 is the infinity polynomial
    const Poly1 F = infinity_polynomial(X, Chart::U1);
    const Poly1 du0 = c1.du.restrict_y(0.0);
    for (int k = 0; k <= std::max(F.degree(), du0.degree()); ++k)
        CHECK(du0.coeff(k) == doctest::Approx(F.coeff(k)).epsilon(1e-14));

    // (u,v) = (0,1) is the plane corner (1,0): both components vanish
    CHECK(c1.du.eval(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(c1.dv.eval(0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));

    // V charts differ by (-1)^(n-1)
    SplitMix64 rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        const EssField Y = random_field(rng, 1 + static_cast<int>(rng.next_u64() % 3));
        const ChartField u1 = chart_field(Y, Chart::U1);
        const ChartField v1 = chart_field(Y, Chart::V1);
        const double sign = (u1.n - 1) % 2 == 0 ? 1.0 : -1.0;
        CHECK((v1.du - u1.du * sign).max_abs_coeff() == 0.0);
        CHECK((v1.dv - u1.dv * sign).max_abs_coeff() == 0.0);

        // chart dynamics agrees with the plane flow direction off the equator
        const double x = rng.uniform(2.0, 4.0), y = rng.uniform(-1.5, 1.5);
        const Vec2 uv = plane_to_chart(Chart::U1, x, y);
        const Vec2 w = u1.at(uv[0], uv[1]);
        // du/dt = (x Q - y P)/x^2 up to the positive factor v^(n-1), v > 0
        const Vec2 pq = Y.at(x, y);
        const double du_plane = (x * pq[1] - y * pq[0]) / (x * x);
        if (std::abs(du_plane) > 1e-9) CHECK(w[0] * du_plane > 0.0);
    }
}

TEST_CASE("infinity singularities") {
    SUBCASE("matching pennies: non-simple double roots at the poles") {
        const auto sings = infinity_singularities(mp_field());
        REQUIRE(sings.size() == 2);
        CHECK(sings[0].chart == Chart::U1);
        CHECK(sings[0].u0 == doctest::Approx(0.0).epsilon(1e-10));
        CHECK_FALSE(sings[0].simple_root);
        CHECK(sings[0].cls.kind == SingKind::NonSimple);
        CHECK(sings[0].eig_tangent == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(sings[1].chart == Chart::U2);
    }

    SUBCASE("f = 1+x, g = 1+y: roots -1, 0, 1 plus the U2 pole") {
        const EssField X = build_field(Poly2::constant(1) + Poly2::var_x(),
                                       Poly2::constant(1) + Poly2::var_y(), 1);
        const auto sings = infinity_singularities(X);
        REQUIRE(sings.size() == 4);
        CHECK(sings[0].u0 == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(sings[1].u0 == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(sings[2].u0 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sings[3].chart == Chart::U2);
        CHECK(sings[3].u0 == doctest::Approx(0.0).epsilon(1e-10));
    }

    SUBCASE("vanishing equator restriction is flagged") {
        // f = y, g = x makes F identically zero
        CHECK_THROWS_AS(infinity_singularities(build_field(Poly2::var_y(), Poly2::var_x(), 1)),
                        NonIsolatedInfinity);
    }

    SUBCASE("root residuals and count bound") {
        SplitMix64 rng(101);
        for (int rep = 0; rep < 25; ++rep) {
            const int d = 1 + static_cast<int>(rng.next_u64() % 3);
            const EssField Y = random_field(rng, d);
            const Poly1 F = infinity_polynomial(Y, Chart::U1);
            CHECK(F.degree() <= d + 2);
            const auto sings = infinity_singularities(Y);
            for (const auto& s : sings) {
                const Poly1& poly =
                    (s.chart == Chart::U1) ? F : infinity_polynomial(Y, Chart::U2);
                const double scale = poly.scale_on(std::abs(s.u0) + 1.0);
                CHECK(std::abs(poly.eval(s.u0)) <= 1e-10 * (1.0 + scale));
            }
        }
    }
}

#include <doctest.h>

#include <cmath>

#include "essstab/model.hpp"
#include "essstab/util.hpp"

using namespace essstab;

namespace {

PayoffGame matching_pennies() {
    PayoffGame g;
    g.n = 0;
    g.A[0][0] = Poly2::constant(0);
    g.A[0][1] = Poly2::constant(1);
    g.A[1][0] = Poly2::constant(1);
    g.A[1][1] = Poly2::constant(0);
    g.B[0][0] = Poly2::constant(1);
    g.B[0][1] = Poly2::constant(0);
    g.B[1][0] = Poly2::constant(0);
    g.B[1][1] = Poly2::constant(1);
    return g;
}

EssField mp_field() {
    Poly2 f, g;
    f.set(0, 0, -1.0);
    f.set(0, 1, 2.0);  // 2y - 1
    g.set(0, 0, 1.0);
    g.set(1, 0, -2.0);  // 1 - 2x
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

TEST_CASE("game reduction to the planar field") {
    const EssField X = reduce_game(matching_pennies());
    CHECK(X.d() == 1);
    CHECK(X.f().coeff(0, 0) == -1.0);
    CHECK(X.f().coeff(0, 1) == 2.0);
    CHECK(X.g().coeff(0, 0) == 1.0);
    CHECK(X.g().coeff(1, 0) == -2.0);

    PayoffGame zero;
    zero.n = 0;
    const EssField Z = reduce_game(zero);
    CHECK(Z.f().is_zero());
    CHECK(Z.g().is_zero());

    // polynomial payoff: only A12 = x
    PayoffGame g;
    g.n = 1;
    g.A[0][1] = Poly2::var_x();
    const EssField Y = reduce_game(g);
    CHECK(Y.d() == 2);
    CHECK(Y.f().coeff(1, 0) == -1.0);  // -x
    CHECK(Y.f().coeff(1, 1) == 1.0);   // +xy
    CHECK(Y.g().is_zero());
}

TEST_CASE("build_field expansion and degree guard") {
    const EssField X = mp_field();
    // P = x(x-1)(2y-1) = 2x^2 y - x^2 - 2xy + x
    CHECK(X.P().coeff(2, 1) == 2.0);
    CHECK(X.P().coeff(2, 0) == -1.0);
    CHECK(X.P().coeff(1, 1) == -2.0);
    CHECK(X.P().coeff(1, 0) == 1.0);
    CHECK(X.P().terms().size() == 4);

    CHECK_THROWS_AS(build_field(Poly2::monomial(2, 0, 1.0), Poly2{}, 1), DegreeExceeded);
    const EssField Z = build_field(Poly2{}, Poly2{}, 0);
    CHECK(Z.f().is_zero());
}

TEST_CASE("lambda invariance of the factored evaluation") {
    SplitMix64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const EssField X = random_field(rng, 3);
        for (int k = 0; k < 8; ++k) {
            const double t = rng.uniform(-4.0, 4.0);
            CHECK(X.eval_P(0.0, t) == 0.0);
            CHECK(X.eval_P(1.0, t) == 0.0);
            CHECK(X.eval_Q(t, 0.0) == 0.0);
            CHECK(X.eval_Q(t, 1.0) == 0.0);
        }
        // expanded products carry the line factors structurally
        CHECK(X.P().restrict_x(0.0).is_zero());
        CHECK(X.Q().restrict_y(0.0).is_zero());
    }
}

TEST_CASE("coefficient metric") {
    const EssField X = build_field(Poly2::constant(1.0), Poly2{}, 0);
    const EssField Y = build_field(Poly2{}, Poly2::constant(1.0), 0);
    CHECK(distance(X, X) == 0.0);
    CHECK(distance(X, Y) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(distance(X, mp_field()), MismatchedDegree);

    // metric axioms on random triples
    SplitMix64 rng(5);
    for (int rep = 0; rep < 25; ++rep) {
        const EssField A = random_field(rng, 2);
        const EssField B = random_field(rng, 2);
        const EssField C = random_field(rng, 2);
        CHECK(distance(A, B) >= 0.0);
        CHECK(distance(A, B) == doctest::Approx(distance(B, A)).epsilon(1e-15));
        CHECK(distance(A, C) <= distance(A, B) + distance(B, C) + 1e-12);
    }

    // coefficient vector round trip
    const EssField A = random_field(rng, 2);
    const EssField back = field_from_coefficients(2, coefficient_vector(A));
    CHECK(distance(A, back) == 0.0);
}

TEST_CASE("four-dimensional replicator simulation") {
    const PayoffGame game = matching_pennies();

    SUBCASE("interior equilibrium stays put") {
        const auto tr = simulate_4d(game, {0.5, 0.5, 0.5, 0.5}, 5.0, 101);
        for (const auto& s : tr.y) {
            CHECK(std::abs(s[0] - 0.5) < 1e-9);
            CHECK(std::abs(s[2] - 0.5) < 1e-9);
        }
    }

    SUBCASE("invariant face x1 = 0") {
        const auto tr = simulate_4d(game, {0.0, 1.0, 0.3, 0.7}, 5.0, 101);
        for (const auto& s : tr.y) CHECK(std::abs(s[0]) < 1e-12);
    }

    SUBCASE("projection matches the reduced planar flow") {
        const auto tr4 = simulate_4d(game, {0.3, 0.7, 0.6, 0.4}, 10.0, 501);
        const auto tr2 = integrate_planar(reduce_game(game), {0.3, 0.6}, 10.0, 501);
        double max_dev = 0.0;
        for (std::size_t k = 0; k < tr2.size(); ++k) {
            max_dev = std::max(max_dev, std::abs(tr4.y[k][0] - tr2[k][0]));
            max_dev = std::max(max_dev, std::abs(tr4.y[k][2] - tr2[k][1]));
        }
        CHECK(max_dev < 1e-6);
    }

    SUBCASE("off-simplex start is rejected") {
        CHECK_THROWS_AS(simulate_4d(game, {0.4, 0.4, 0.5, 0.5}, 1.0), ToleranceFailure);
    }
}

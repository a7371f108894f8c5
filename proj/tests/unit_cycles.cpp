#include <doctest.h>

#include <cmath>

#include "essstab/cycles.hpp"
#include "essstab/util.hpp"

using namespace essstab;

namespace {

// textbook oracle with the exact closed orbit r = 1:
//   x' = -y + x(1 - x^2 - y^2),  y' = x + y(1 - x^2 - y^2)
Flow2 circle_oracle() {
    Flow2 f;
    f.v = [](double x, double y) {
        const double w = 1.0 - x * x - y * y;
        return Vec2{-y + x * w, x + y * w};
    };
    f.div = [](double x, double y) { return 2.0 - 4.0 * (x * x + y * y); };
    return f;
}

Flow2 reversed_circle_oracle() {
    Flow2 f;
    f.v = [](double x, double y) {
        const double w = 1.0 - x * x - y * y;
        return Vec2{y - x * w, -x - y * w};
    };
    f.div = [](double x, double y) { return -(2.0 - 4.0 * (x * x + y * y)); };
    return f;
}

EssField mp_field() {
    Poly2 f, g;
    f.set(0, 0, -1.0);
    f.set(0, 1, 2.0);
    g.set(0, 0, 1.0);
    g.set(1, 0, -2.0);
    return build_field(f, g, 1);
}

Section axis_section() {
    Section sec;
    sec.base = {1.0, 0.0};
    sec.dir = {1.0, 0.0};
    sec.half_length = 0.9;
    return sec;
}

}  // namespace

TEST_CASE("return map on the circle oracle") {
    const Flow2 flow = circle_oracle();
    const Section sec = axis_section();
    CHECK(sec.transversal(flow));

    // the closed orbit returns to itself
    const ReturnResult r1 = return_map(flow, sec, 0.0);  // point (1, 0)
    REQUIRE(r1.status == ReturnStatus::Ok);
    CHECK(std::abs(r1.s_next) < 1e-9);
    CHECK(r1.time == doctest::Approx(2.0 * M_PI).epsilon(1e-9));

    // radial monotonicity: 0.5 maps into (0.5, 1.0)
    const ReturnResult r2 = return_map(flow, sec, -0.5);  // point (0.5, 0)
    REQUIRE(r2.status == ReturnStatus::Ok);
    CHECK(r2.s_next > -0.5);
    CHECK(r2.s_next < 0.0);

    // an escaping field leaves the domain
    Flow2 runaway;
    runaway.v = [](double, double) { return Vec2{1.0, 0.0}; };
    runaway.div = [](double, double) { return 0.0; };
    Section vertical;
    vertical.base = {0.0, 0.0};
    vertical.dir = {0.0, 1.0};
    vertical.half_length = 1.0;
    const ReturnResult r3 = return_map(runaway, vertical, 0.5);
    CHECK(r3.status == ReturnStatus::LeftDomain);
}

TEST_CASE("cycle detection and hyperbolicity on the oracle") {
    const Flow2 flow = circle_oracle();
    const Section sec = axis_section();
    ScanOptions opt;
    opt.sections = 40;
    const CycleScan scan = scan_section_for_cycles(flow, sec, -0.8, 0.8, opt);
    REQUIRE(scan.cycles.size() == 1);
    const LimitCycleRecord& c = scan.cycles[0];

    CHECK(std::abs(c.s_star) < 1e-10);  // the cycle crosses at (1, 0)
    CHECK(c.period == doctest::Approx(2.0 * M_PI).epsilon(1e-7));
    CHECK(c.r_gamma == doctest::Approx(-4.0 * M_PI).epsilon(1e-4));
    CHECK(c.closure_error < 1e-8);
    CHECK(c.verdict == CycleVerdict::HyperbolicStable);

    // divergence route vs return-map slope route
    CHECK(std::exp(c.r_gamma) == doctest::Approx(c.multiplier).epsilon(1e-3));
    CHECK(c.slope_check_error <= 1e-4);
    MESSAGE("slope check |r - log m| = ", c.slope_check_error);

    // time reversal flips the sign of the divergence integral
    const Flow2 rev = reversed_circle_oracle();
    const CycleScan rscan = scan_section_for_cycles(rev, sec, -0.8, 0.8, opt);
    REQUIRE(rscan.cycles.size() == 1);
    CHECK(rscan.cycles[0].r_gamma == doctest::Approx(4.0 * M_PI).epsilon(1e-4));
    CHECK(rscan.cycles[0].verdict == CycleVerdict::HyperbolicUnstable);
}

TEST_CASE("replicator center is reported as a band, not cycles") {
    ScanOptions opt;
    opt.sections = 24;
    const CycleScan scan = find_limit_cycles(mp_field(), Box{-2, 3, -2, 3}, opt);
    CHECK(scan.non_isolated_band);
    CHECK(scan.cycles.empty());
}

TEST_CASE("no antisaddle, no scan") {
    const EssField ones = build_field(Poly2::constant(1), Poly2::constant(1), 0);
    const CycleScan scan = find_limit_cycles(ones);
    CHECK(scan.cycles.empty());
    CHECK_FALSE(scan.non_isolated_band);
}

TEST_CASE("invariant algebraic curves") {
    const EssField X = mp_field();

    // F = x: P F_x + Q F_y = x(x-1) f, so K = (x-1) f
    const CofactorResult rx = check_invariant_algebraic_curve(X, Poly2::var_x());
    REQUIRE(rx.invariant);
    const Poly2 expect = (Poly2::var_x() - Poly2::constant(1.0)) * X.f();
    CHECK((rx.cofactor - expect).max_abs_coeff() <= 1e-14);

    // F = y(y-1): K = (2y - 1) g
    const Poly2 yy = Poly2::monomial(0, 2, 1.0) - Poly2::var_y();
    const CofactorResult ry = check_invariant_algebraic_curve(X, yy);
    REQUIRE(ry.invariant);
    const Poly2 expect2 = (Poly2::monomial(0, 1, 2.0) - Poly2::constant(1.0)) * X.g();
    CHECK((ry.cofactor - expect2).max_abs_coeff() <= 1e-14);

    // a generic conic is not invariant
    const Poly2 conic =
        Poly2::monomial(2, 0, 1.0) + Poly2::monomial(0, 2, 1.0) + Poly2::constant(1.0);
    SplitMix64 rng(5);
    Poly2 f, g;
    for (int total = 0; total <= 2; ++total)
        for (int i = 0; i <= total; ++i) {
            f.set(i, total - i, rng.uniform(-1, 1));
            g.set(i, total - i, rng.uniform(-1, 1));
        }
    const CofactorResult rc = check_invariant_algebraic_curve(build_field(f, g, 2), conic);
    CHECK_FALSE(rc.invariant);
    CHECK(rc.residual > 1e-6);

    // the product of the four line factors is a first integral of matching
    // pennies: cofactor exactly zero
    const Poly2 lines = (Poly2::monomial(2, 0, 1.0) - Poly2::var_x()) *
                        (Poly2::monomial(0, 2, 1.0) - Poly2::var_y());
    const CofactorResult rl = check_invariant_algebraic_curve(X, lines);
    REQUIRE(rl.invariant);
    CHECK(rl.cofactor.is_zero());
}

TEST_CASE("reported cycles enclose a singularity") {
    const Flow2 flow = circle_oracle();
    const Section sec = axis_section();
    ScanOptions opt;
    opt.sections = 24;
    const CycleScan scan = scan_section_for_cycles(flow, sec, -0.8, 0.8, opt);
    REQUIRE(scan.cycles.size() == 1);
    // winding of the position vector around the origin over the samples
    double angle = 0.0;
    const auto& pts = scan.cycles[0].samples;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const Vec2 a = pts[k - 1], b = pts[k];
        angle += std::atan2(cross(a, b), dot(a, b));
    }
    CHECK(std::abs(angle) > 5.0);  // a full loop around the enclosed point
}

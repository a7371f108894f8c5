#ifndef ESSSTAB_COMPACTIFY_HPP
#define ESSSTAB_COMPACTIFY_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "essstab/classify.hpp"
#include "essstab/model.hpp"
#include "essstab/poly.hpp"

namespace essstab {

struct NonIsolatedInfinity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Chart { U1, U2, V1, V2 };

std::string to_string(Chart c);

// Vector field of the compactified system in one local chart, with
// coordinates (u, v); v = 0 is the equator. Components are polynomial:
//   U1:  du = sum_k v^(n-k) [Q_k(1,u) - u P_k(1,u)],  dv = -v^(n+1-k) P_k(1,u)
//   U2:  du = sum_k v^(n-k) [P_k(u,1) - u Q_k(u,1)],  dv = -v^(n+1-k) Q_k(u,1)
// and the V charts carry the extra factor (-1)^(n-1), n = d + 2.
struct ChartField {
    Chart chart = Chart::U1;
    int n = 0;
    Poly2 du;  // (u,v) stored as (x,y) exponents
    Poly2 dv;

    Vec2 at(double u, double v) const { return {du.eval(u, v), dv.eval(u, v)}; }
};

ChartField chart_field(const EssField& X, Chart chart);

// Restriction of the equator dynamics: zeros are the singularities at
// infinity visible in the chart. U1 gives F(u) = u(u g_d(1,u) - f_d(1,u)),
// U2 gives G(u) = u(u f_d(u,1) - g_d(u,1)); u = 0 is a root of both.
// V charts share the zero set of their U partners.
Poly1 infinity_polynomial(const EssField& X, Chart chart);

struct InfinitySingularity {
    Chart chart = Chart::U1;  // canonical representative: U1 for |u|<=1, else U2
    double u0 = 0.0;
    Mat2 jacobian;       // upper triangular in chart coordinates
    double eig_tangent;  // F'(u0) resp. G'(u0)
    double eig_normal;   // -f_d(1,u0) resp. -g_d(u0,1)
    Classification cls;
    bool simple_root = true;  // root multiplicity evidence from isolation
    double residual = 0.0;    // |F(u0)| (or |G(u0)|)
};

// All singularities on the equator, one entry per antipodal pair. Roots
// with |u| > 1 in U1 are picked up through the complementary chart and
// deduplicated(1/u) with tolerance 1e-9. Throws NonIsolatedInfinity when
// the equator restriction vanishes identically.
std::vector<InfinitySingularity> infinity_singularities(const EssField& X,
                                                        double tol_hyperbolic = 1e-8);

// chart coordinate conversions for points near the equator
// U1: (u,v) = (y/x, 1/x)        U2: (u,v) = (x/y, 1/y)
inline Vec2 plane_to_chart(Chart c, double x, double y) {
    if (c == Chart::U1 || c == Chart::V1) return {y / x, 1.0 / x};
    return {x / y, 1.0 / y};
}
inline Vec2 chart_to_plane(Chart c, double u, double v) {
    if (c == Chart::U1 || c == Chart::V1) return {1.0 / v, u / v};
    return {u / v, 1.0 / v};
}

}  // namespace essstab

#endif

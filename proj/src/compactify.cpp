#include "essstab/compactify.hpp"

#include <algorithm>
#include <cmath>

namespace essstab {

std::string to_string(Chart c) {
    switch (c) {
        case Chart::U1: return "U1";
        case Chart::U2: return "U2";
        case Chart::V1: return "V1";
        case Chart::V2: return "V2";
    }
    return "?";
}

ChartField chart_field(const EssField& X, Chart chart) {
    const int n = X.d() + 2;
    const bool first = (chart == Chart::U1 || chart == Chart::V1);
    const bool v_chart = (chart == Chart::V1 || chart == Chart::V2);
    const Poly2& P = X.P();
    const Poly2& Q = X.Q();

    ChartField out;
    out.chart = chart;
    out.n = n;
    for (int k = 0; k <= n; ++k) {
        // restrictions of the degree-k homogeneous parts along the chart slice
        const Poly1 Pk = first ? P.homogeneous_on_u(k, true) : P.homogeneous_on_u(k, false);
        const Poly1 Qk = first ? Q.homogeneous_on_u(k, true) : Q.homogeneous_on_u(k, false);
        const Poly1 tang = first ? (Qk - Pk.shifted(1)) : (Pk - Qk.shifted(1));
        const Poly1& norm = first ? Pk : Qk;
        for (int m = 0; m <= tang.degree(); ++m)
            if (tang.coeff(m) != 0.0) out.du.add_term(m, n - k, tang.coeff(m));
        for (int m = 0; m <= norm.degree(); ++m)
            if (norm.coeff(m) != 0.0) out.dv.add_term(m, n + 1 - k, -norm.coeff(m));
    }
    if (v_chart && (n - 1) % 2 != 0) {
        out.du = -out.du;
        out.dv = -out.dv;
    }
    return out;
}

Poly1 infinity_polynomial(const EssField& X, Chart chart) {
    const int d = X.d();
    const bool first = (chart == Chart::U1 || chart == Chart::V1);
    const Poly1 fd = X.f().homogeneous_on_u(d, first);
    const Poly1 gd = X.g().homogeneous_on_u(d, first);
    // U1: u (u g_d(1,u) - f_d(1,u));  U2: u (u f_d(u,1) - g_d(u,1))
    const Poly1 inner = first ? (gd.shifted(1) - fd) : (fd.shifted(1) - gd);
    return inner.shifted(1);
}

namespace {

InfinitySingularity make_infinity(const EssField& X, const ChartField& cf, const Poly1& poly,
                                  Chart chart, double u0, bool simple_root, double tol_hyp) {
    InfinitySingularity s;
    s.chart = chart;
    s.u0 = u0;
    s.simple_root = simple_root;
    s.residual = std::abs(poly.eval(u0));
    s.eig_tangent = poly.derivative().eval(u0);
    const bool first = (chart == Chart::U1);
    const Poly1 top = first ? X.f().homogeneous_on_u(X.d(), true)
                            : X.g().homogeneous_on_u(X.d(), false);
    s.eig_normal = -top.eval(u0);
    Mat2 J;
    J.a11 = s.eig_tangent;
    J.a12 = cf.du.partial('y').eval(u0, 0.0);
    J.a21 = 0.0;
    J.a22 = s.eig_normal;
    s.jacobian = J;
    s.cls = classify_jacobian(J, tol_hyp);
    // a multiple root of the equator restriction is never hyperbolic
    if (!s.simple_root && s.cls.kind != SingKind::NonSimple &&
        s.cls.kind != SingKind::SemiHyperbolic) {
        s.cls.kind = std::abs(s.eig_normal) > s.cls.tol ? SingKind::SemiHyperbolic
                                                        : SingKind::NonSimple;
        s.cls.hyperbolic = false;
        s.cls.stability = Stability::Undetermined;
    }
    return s;
}

}  // namespace

std::vector<InfinitySingularity> infinity_singularities(const EssField& X, double tol_hyperbolic) {
    const Poly1 F = infinity_polynomial(X, Chart::U1);
    const Poly1 G = infinity_polynomial(X, Chart::U2);
    if (F.is_zero() || G.is_zero())
        throw NonIsolatedInfinity("equator restriction vanishes identically");

    const ChartField cf1 = chart_field(X, Chart::U1);
    const ChartField cf2 = chart_field(X, Chart::U2);
    const double margin = 1e-7;

    auto roots_F = real_roots(F, -1.0 - margin, 1.0 + margin);
    auto roots_G = real_roots(G, -1.0 - margin, 1.0 + margin);

    // the poles u = 0 are structural roots of both restrictions
    auto ensure_zero = [](std::vector<RealRoot>& rs, const Poly1& p) {
        for (const auto& r : rs)
            if (std::abs(r.x) < 1e-9) return;
        rs.push_back({0.0, std::abs(p.derivative().eval(0.0)) > 1e-9});
    };
    ensure_zero(roots_F, F);
    ensure_zero(roots_G, G);

    std::vector<InfinitySingularity> out;
    for (const auto& r : roots_F) {
        if (std::abs(r.x) > 1.0 + 1e-9) continue;
        out.push_back(make_infinity(X, cf1, F, Chart::U1, r.x, r.simple, tol_hyperbolic));
    }
    for (const auto& r : roots_G) {
        // roots at |u| >= 1 map to U1 coordinates 1/u inside [-1,1] and are
        // already represented there; keep the strict interior of U2 only
        if (std::abs(r.x) >= 1.0 - 1e-9) continue;
        out.push_back(make_infinity(X, cf2, G, Chart::U2, r.x, r.simple, tol_hyperbolic));
    }

    std::sort(out.begin(), out.end(), [](const InfinitySingularity& a, const InfinitySingularity& b) {
        if (a.chart != b.chart) return a.chart < b.chart;
        return a.u0 < b.u0;
    });
    return out;
}

}  // namespace essstab

#include "essstab/polycycle.hpp"

#include <cmath>

#include "essstab/singular.hpp"

namespace essstab {

namespace {

// sign of an edge factor on the open interval (0,1); 0 when it has a zero
// or is identically zero there
int edge_sign(const Poly1& r, std::string& why, const char* name) {
    if (r.is_zero()) {
        why = std::string("edge factor ") + name + " vanishes identically";
        return 0;
    }
    const double margin = 1e-9;
    for (const auto& root : real_roots(r, margin, 1.0 - margin)) {
        (void)root;
        why = std::string("edge factor ") + name + " has a zero on (0,1)";
        return 0;
    }
    const double v = r.eval(0.5);
    if (v == 0.0) {
        why = std::string("edge factor ") + name + " is zero at the midpoint";
        return 0;
    }
    return v > 0.0 ? 1 : -1;
}

}  // namespace

PolycycleReport detect_square_polycycle(const EssField& X, double tol_generic) {
    PolycycleReport rep;
    rep.tol_generic = tol_generic;

    std::string why;
    const int s_f0 = edge_sign(X.f().restrict_y(0.0), why, "f(x,0)");
    const int s_f1 = edge_sign(X.f().restrict_y(1.0), why, "f(x,1)");
    const int s_g0 = edge_sign(X.g().restrict_x(0.0), why, "g(0,y)");
    const int s_g1 = edge_sign(X.g().restrict_x(1.0), why, "g(1,y)");
    if (s_f0 == 0 || s_f1 == 0 || s_g0 == 0 || s_g1 == 0) {
        rep.reason = why;
        return rep;
    }

    // CCW: f(x,0) < 0, f(x,1) > 0, g(0,y) > 0, g(1,y) < 0; CW is the reverse
    if (s_f0 < 0 && s_f1 > 0 && s_g0 > 0 && s_g1 < 0) {
        rep.orientation = Orientation::CCW;
    } else if (s_f0 > 0 && s_f1 < 0 && s_g0 < 0 && s_g1 > 0) {
        rep.orientation = Orientation::CW;
    } else {
        rep.reason = "mixed edge directions";
        return rep;
    }

    for (int c = 0; c < 4; ++c) {
        const Mat2 J = corner_jacobian(X, c);
        const Classification cls = classify_jacobian(J);
        if (cls.kind != SingKind::HyperbolicSaddle) {
            rep.reason = "corner " + std::to_string(c) + " is not a hyperbolic saddle";
            return rep;
        }
        SaddleRatio sr;
        sr.corner = c;
        sr.mu = std::min(J.a11, J.a22);
        sr.nu = std::max(J.a11, J.a22);
        sr.ratio = std::abs(sr.mu) / sr.nu;
        rep.saddles[c] = sr;
    }

    rep.exists = true;
    rep.r_product = 1.0;
    for (const auto& sr : rep.saddles) rep.r_product *= sr.ratio;
    rep.generic = std::abs(rep.r_product - 1.0) > tol_generic;
    rep.predicted = predict_stability(rep.r_product, rep.orientation, tol_generic);
    return rep;
}

double hyperbolicity_ratio(const EssField& X) {
    const PolycycleReport rep = detect_square_polycycle(X);
    if (!rep.exists)
        throw ZeroDenominator("square polycycle absent: " + rep.reason);
    if (rep.orientation != Orientation::CCW)
        throw ZeroDenominator("corner-value form requires counterclockwise orientation");
    const double f00 = X.f().eval(0, 0), f10 = X.f().eval(1, 0);
    const double f11 = X.f().eval(1, 1), f01 = X.f().eval(0, 1);
    const double g00 = X.g().eval(0, 0), g10 = X.g().eval(1, 0);
    const double g11 = X.g().eval(1, 1), g01 = X.g().eval(0, 1);
    const double den = f00 * g10 * f11 * g01;
    if (den == 0.0) throw ZeroDenominator("corner value vanishes");
    return (g00 * f10 * g11 * f01) / den;
}

PolycycleStability predict_stability(double r, Orientation orientation, double tol) {
    if (orientation == Orientation::CW) {
        // time reversal inverts every saddle ratio; score the reversed field
        // and flip the verdict back
        const PolycycleStability rev = predict_stability(1.0 / r, Orientation::CCW, tol);
        if (rev == PolycycleStability::StableInside) return PolycycleStability::UnstableInside;
        if (rev == PolycycleStability::UnstableInside) return PolycycleStability::StableInside;
        return PolycycleStability::NonGeneric;
    }
    if (r > 1.0 + tol) return PolycycleStability::StableInside;
    if (r < 1.0 - tol) return PolycycleStability::UnstableInside;
    return PolycycleStability::NonGeneric;
}

}  // namespace essstab

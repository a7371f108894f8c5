#include "essstab/classify.hpp"

#include <cmath>

namespace essstab {

Classification classify_jacobian(const Mat2& J, double tol_rel) {
    Classification c;
    const double scale = 1.0 + J.frobenius();
    const double tol = tol_rel * scale;
    c.tol = tol;

    const auto eig = J.eigenvalues();
    const double re1 = eig[0], im1 = eig[1], re2 = eig[2];
    c.min_abs_re = std::min(std::abs(re1), std::abs(re2));
    c.hyperbolic = c.min_abs_re > tol;

    const double det = J.det(), tr = J.trace();
    const double disc = tr * tr - 4.0 * det;
    const double disc_tol = 1e-9 * scale * scale;

    if (c.hyperbolic) {
        if (det < 0.0) {
            c.kind = SingKind::HyperbolicSaddle;
            c.stability = Stability::Saddle;
        } else {
            // a12*a21 >= 0 forces real eigenvalues regardless of how small
            // the discriminant is (disc = (a11-a22)^2 + 4 a12 a21)
            if (disc > disc_tol || J.a12 * J.a21 >= 0.0)
                c.kind = SingKind::HyperbolicNode;
            else if (disc < -disc_tol)
                c.kind = SingKind::HyperbolicFocus;
            else
                c.kind = SingKind::HyperbolicFocusOrNode;
            c.stability = tr > 0.0 ? Stability::Unstable : Stability::Stable;
        }
        return c;
    }

    // not hyperbolic: split degenerate cases
    const double det_tol = tol * scale;
    if (det > det_tol && std::abs(tr) <= 2.0 * tol) {
        c.kind = SingKind::DegenerateMonodromic;
        c.stability = Stability::Undetermined;
    } else if (im1 == 0.0 && std::abs(det) <= det_tol &&
               std::max(std::abs(re1), std::abs(re2)) > tol) {
        c.kind = SingKind::SemiHyperbolic;
        c.stability = Stability::Undetermined;
    } else {
        c.kind = SingKind::NonSimple;
        c.stability = Stability::Undetermined;
    }
    return c;
}

std::string to_string(SingKind k) {
    switch (k) {
        case SingKind::HyperbolicSaddle: return "HyperbolicSaddle";
        case SingKind::HyperbolicNode: return "HyperbolicNode";
        case SingKind::HyperbolicFocus: return "HyperbolicFocus";
        case SingKind::HyperbolicFocusOrNode: return "HyperbolicFocusOrNode";
        case SingKind::SemiHyperbolic: return "SemiHyperbolic";
        case SingKind::DegenerateMonodromic: return "DegenerateMonodromic";
        case SingKind::NonSimple: return "NonSimple";
    }
    return "?";
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "Stable";
        case Stability::Unstable: return "Unstable";
        case Stability::Saddle: return "Saddle";
        case Stability::Undetermined: return "Undetermined";
    }
    return "?";
}

}  // namespace essstab

#ifndef ESSSTAB_CLASSIFY_HPP
#define ESSSTAB_CLASSIFY_HPP

#include <string>

#include "essstab/util.hpp"

namespace essstab {

enum class SingKind {
    HyperbolicSaddle,
    HyperbolicNode,
    HyperbolicFocus,
    HyperbolicFocusOrNode,  // real/complex split below resolution
    SemiHyperbolic,         // exactly one eigenvalue at zero
    DegenerateMonodromic,   // det > 0, trace ~ 0: focus or center
    NonSimple
};

enum class Stability { Stable, Unstable, Saddle, Undetermined };

struct Classification {
    SingKind kind = SingKind::NonSimple;
    Stability stability = Stability::Undetermined;
    bool hyperbolic = false;
    double min_abs_re = 0.0;  // hyperbolicity margin
    double tol = 0.0;         // threshold it was judged against
};

// det/trace/eigenvalue rules with a declared hyperbolicity threshold:
// a point counts as hyperbolic when min |Re lambda| > tol_rel * (1 + |J|_F).
Classification classify_jacobian(const Mat2& J, double tol_rel = 1e-8);

std::string to_string(SingKind k);
std::string to_string(Stability s);

}  // namespace essstab

#endif

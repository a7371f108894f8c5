#ifndef ESSSTAB_PERTURB_HPP
#define ESSSTAB_PERTURB_HPP

#include <stdexcept>
#include <vector>

#include "essstab/cycles.hpp"
#include "essstab/model.hpp"
#include "essstab/poly.hpp"
#include "essstab/util.hpp"

namespace essstab {

struct TailNotDecaying : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotInvariantCurve : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// One-parameter rotated family: f' = f - lambda eps g, g' = g + lambda eps f.
// Stays in the same degree class and preserves the invariant lines.
EssField rotate_family(const EssField& X, double eps, double lambda);

// Wedge of the family with its lambda-derivative at lambda = 0:
//   H = x(x-1) y(y-1) eps (f^2 + g^2),
// which vanishes on the invariant set and keeps one sign inside the square.
Poly2 wedge_density(const EssField& X, double eps);

// Heteroclinic orbit between two hyperbolic saddles, sampled with its time
// grid; gamma(0) is the base point the displacement derivative is anchored at.
struct SaddleConnection {
    Vec2 source{}, target{};
    Mat2 source_jacobian, target_jacobian;
    Vec2 base_point{};
    bool inside_lambda = false;  // orbit contained in the invariant set
};

struct MelnikovResult {
    double value = 0.0;     // D'(0)
    double integral = 0.0;  // the truncated improper integral itself
    double t_forward = 0.0, t_backward = 0.0;
    double richardson_error = 0.0;  // relative trapezoid self-consistency
};

// Displacement derivative of the rotated family across the connection:
//   D'(0) = -(1/|X(x0)|) Int exp(-Int_0^t div) H(gamma(t)) dt
// truncated where the saddle eigenvalues bound the tail below 1e-14.
// Connections inside the invariant set give exactly zero.
MelnikovResult melnikov_derivative(const EssField& X, double eps, const SaddleConnection& conn);

// Theorem-style perturbation along an invariant algebraic curve F:
//   f' = f + eps d1 F F_x,  g' = g + eps d2 F F_y   (d1, d2 in {-1, +1})
// F must verify as invariant and the perturbed factors must respect the
// degree bound.
EssField algebraic_cycle_perturbation(const EssField& X, const Poly2& F, double eps, int delta1,
                                      int delta2);

// The divergence-integral shift of a cycle inside F^{-1}(0) under the
// perturbation above: eps * Int_0^T [x(x-1) d1 F_x^2 + y(y-1) d2 F_y^2] dt,
// evaluated by quadrature along the sampled orbit.
double algebraic_cycle_r_shift(const EssField& X, const Poly2& F, double eps, int delta1,
                               int delta2, const LimitCycleRecord& cycle);

}  // namespace essstab

#endif

#ifndef ESSSTAB_POLYCYCLE_HPP
#define ESSSTAB_POLYCYCLE_HPP

#include <stdexcept>
#include <string>

#include "essstab/model.hpp"

namespace essstab {

struct ZeroDenominator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Orientation { CCW, CW };
enum class PolycycleStability { StableInside, UnstableInside, NonGeneric };

struct SaddleRatio {
    int corner = 0;     // 0..3 over (0,0),(1,0),(1,1),(0,1)
    double mu = 0.0;    // negative eigenvalue
    double nu = 0.0;    // positive eigenvalue
    double ratio = 0.0; // |mu| / nu
};

struct PolycycleReport {
    bool exists = false;
    std::string reason;  // why not, when exists is false
    Orientation orientation = Orientation::CCW;
    std::array<SaddleRatio, 4> saddles{};
    double r_product = 0.0;  // product of the hyperbolicity ratios
    bool generic = false;
    PolycycleStability predicted = PolycycleStability::NonGeneric;
    double tol_generic = 1e-6;
};

// The boundary of the unit square is a polycycle iff the four corners are
// hyperbolic saddles and the edge factors f(.,0), f(.,1), g(0,.), g(1,.)
// have no zeros on (0,1). Orientation comes from the edge sign pattern;
// mixed edge directions mean there is no polycycle.
PolycycleReport detect_square_polycycle(const EssField& X, double tol_generic = 1e-6);

// Corner-value closed form of r for a counterclockwise square polycycle:
//   [g(0,0) f(1,0) g(1,1) f(0,1)] / [f(0,0) g(1,0) f(1,1) g(0,1)]
// Throws ZeroDenominator when a corner fails to be hyperbolic.
double hyperbolicity_ratio(const EssField& X);

// r > 1: stable from inside; r < 1: unstable; |r-1| <= tol: non-generic.
// A CW polycycle is scored through the time-reversed field, whose ratio is
// 1/r, and the verdict is flipped back; that reduces to the same rule.
PolycycleStability predict_stability(double r, Orientation orientation, double tol = 1e-6);

}  // namespace essstab

#endif

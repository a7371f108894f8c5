#ifndef ESSSTAB_SINGULAR_HPP
#define ESSSTAB_SINGULAR_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "essstab/classify.hpp"
#include "essstab/compactify.hpp"
#include "essstab/model.hpp"

namespace essstab {

struct NotASingularity : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IndexUndetermined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Box {
    double x0 = -10.0, x1 = 11.0, y0 = -10.0, y1 = 11.0;

    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

struct Singularity {
    Vec2 location{};
    Mat2 jacobian;
    std::array<double, 4> eigenvalues{};  // re1, im1, re2, im2
    Classification cls;
    int index = 0;
    bool index_defined = false;
    bool on_lambda = false;  // sits on one of the four invariant lines
    bool is_corner = false;
    double residual = 0.0;  // |(P,Q)| at the reported location
};

struct FiniteSingularities {
    std::vector<Singularity> points;
    // subdivision cells where neither exclusion nor Newton convergence was
    // reached before the size floor; non-empty flags a near-degenerate field
    std::vector<Box> unresolved_boxes;
    // invariant lines on which f resp. g vanishes identically (a continuum
    // of singularities); entries are "x=0", "x=1", "y=0", "y=1"
    std::vector<std::string> degenerate_lines;
};

// Corners + invariant-line roots + interior f = g = 0 intersections,
// the latter by box subdivision with a Bernstein-coefficient exclusion
// test and damped-Newton polish. Deterministic: sorted by location.
FiniteSingularities find_finite_singularities(const EssField& X, const Box& box = Box{},
                                              double tol_hyperbolic = 1e-8);

// Finite singularities beyond the search box, located through the
// compactification charts (zeros of the chart fields with |v| above the
// equator resolution floor, mapped back to the plane). Together with the
// box search this covers the whole sphere.
FiniteSingularities find_far_singularities(const EssField& X, double v_max = 0.11,
                                           double tol_hyperbolic = 1e-8);

// box search + chart completion, deduplicated
FiniteSingularities find_all_finite_singularities(const EssField& X, const Box& box = Box{},
                                                  double tol_hyperbolic = 1e-8);

// Classification of a given singular location (residual must be <= 1e-9).
Singularity classify_point(const EssField& X, Vec2 p, double tol_hyperbolic = 1e-8);

// Closed-form diagonal Jacobians at the four corners (0,0),(1,0),(1,1),(0,1).
Mat2 corner_jacobian(const EssField& X, int corner);
constexpr std::array<Vec2, 4> kCorners{{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}};

// Poincare index from the resolved kind; throws IndexUndetermined for
// semi-hyperbolic and non-simple points.
int poincare_index(const Classification& cls);

struct IndexSum {
    bool passes = false;
    int finite_sum = 0;    // sum over finite singularities (one hemisphere)
    int infinity_sum = 0;  // sum over all equator points (antipodal pairs both counted)
    int total = 0;         // 2 * finite_sum + infinity_sum, must equal 2
};

// Sphere index-sum consistency check; propagates IndexUndetermined.
IndexSum index_sum_check(const EssField& X, const Box& box = Box{});

// Winding number of a vector field along a circle, by adaptive sampling of
// accumulated angle increments. Independent of the classification path;
// used to cross-validate assigned indices.
int winding_number(const std::function<Vec2(double, double)>& field, Vec2 center, double radius);

}  // namespace essstab

#endif

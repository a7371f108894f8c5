#ifndef ESSSTAB_CYCLES_HPP
#define ESSSTAB_CYCLES_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "essstab/model.hpp"
#include "essstab/poly.hpp"
#include "essstab/singular.hpp"
#include "essstab/util.hpp"

namespace essstab {

struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A planar flow given by callables; the cycle machinery works on any such
// flow, not only replicator fields (the textbook circle oracle drives the
// tests through the same interface).
struct Flow2 {
    std::function<Vec2(double, double)> v;
    std::function<double(double, double)> div;
};

Flow2 make_flow(const EssField& X);
Flow2 reverse_flow(const Flow2& flow);

// Transversal segment: points base + s * dir for s in [-half_length, half_length].
struct Section {
    Vec2 base{};
    Vec2 dir{1.0, 0.0};  // unit
    double half_length = 1.0;

    Vec2 point(double s) const { return {base[0] + s * dir[0], base[1] + s * dir[1]}; }
    Vec2 normal() const { return {-dir[1], dir[0]}; }
    double coord(const Vec2& p) const { return (p[0] - base[0]) * dir[0] + (p[1] - base[1]) * dir[1]; }
    double offset(const Vec2& p) const {
        return (p[0] - base[0]) * -dir[1] + (p[1] - base[1]) * dir[0];
    }

    // |normal component| > 1e-6 |field| at 32 points of the span
    bool transversal(const Flow2& flow) const;
};

struct ReturnOptions {
    double t_max = 1e4;
    Box domain{-50.0, 51.0, -50.0, 51.0};
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
};

enum class ReturnStatus { Ok, NoReturn, LeftDomain };

struct ReturnResult {
    ReturnStatus status = ReturnStatus::NoReturn;
    double s_next = 0.0;
    double time = 0.0;
};

// First return to the section with the same crossing direction, located by
// dense-output sign change and bisection refinement.
ReturnResult return_map(const Flow2& flow, const Section& section, double s,
                        const ReturnOptions& opt = {});

enum class CycleVerdict { HyperbolicStable, HyperbolicUnstable, NonHyperbolicSuspect };

struct LimitCycleRecord {
    std::vector<Vec2> samples;
    double period = 0.0;
    double s_star = 0.0;
    Section section{};
    double r_gamma = 0.0;           // divergence integral over one period
    double multiplier = 0.0;        // finite-difference return-map slope
    double slope_check_error = 0.0; // |r_gamma - log multiplier|
    CycleVerdict verdict = CycleVerdict::NonHyperbolicSuspect;
    double closure_error = 0.0;
    int scan_sections = 0;  // resolution that found it
};

struct CycleScan {
    std::vector<LimitCycleRecord> cycles;
    bool non_isolated_band = false;  // displacement ~ 0 across the grid
    int scan_gaps = 0;               // grid points with no usable return
    int sections = 0;
};

struct ScanOptions {
    int sections = 200;
    double tol_cycle_hyperbolic = 1e-5;  // |r| below this is NonHyperbolicSuspect
    double non_isolated_eps = 1e-9;      // |d(s)| threshold for the band flag
    ReturnOptions ret{};
};

// Scans the displacement d(s) = return_map(s) - s over [s_min, s_max] of
// the section in both time directions (orbits outside an unstable cycle
// escape forward but return under reversal), isolates sign changes,
// bisects to fixed points and fills in hyperbolicity data for each cycle.
CycleScan scan_section_for_cycles(const Flow2& flow, const Section& section, double s_min,
                                  double s_max, const ScanOptions& opt = {});

// Sections are placed across the annulus around each interior antisaddle
// (finite singularities with det > 0 off the invariant lines). Cycle lists
// are deduplicated across sections by orbit proximity.
CycleScan find_limit_cycles(const EssField& X, const Box& region = Box{}, ScanOptions opt = {});

// Divergence integral along the closed orbit through section coordinate
// s_star, cross-checked against the finite-difference return-map slope.
// Fills r_gamma, multiplier, period, samples, verdict of the record.
// integrate_reversed runs the orbit in reversed time (the numerically
// stable direction around a repelling cycle); r_gamma is still reported
// in forward-time convention.
void cycle_hyperbolicity(const Flow2& flow, LimitCycleRecord& rec, const ScanOptions& opt = {},
                         bool integrate_reversed = false);

struct CofactorResult {
    bool invariant = false;
    Poly2 cofactor;         // K with P F_x + Q F_y = K F
    double residual = 0.0;  // max |remainder coefficient|
};

// Polynomial division test for invariant algebraic curves (remainder
// coefficients below 1e-10 accept F as invariant).
CofactorResult check_invariant_algebraic_curve(const EssField& X, const Poly2& F);

}  // namespace essstab

#endif

#ifndef ESSSTAB_MODEL_HPP
#define ESSSTAB_MODEL_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "essstab/poly.hpp"
#include "essstab/util.hpp"

namespace essstab {

struct DegreeExceeded : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MismatchedDegree : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ToleranceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two-player, two-strategy game with polynomial payoffs. A[i][j] is the
// payoff of pure strategy i of the first player against pure strategy j
// of the second; B is the transposed role.
struct PayoffGame {
    std::array<std::array<Poly2, 2>, 2> A{};
    std::array<std::array<Poly2, 2>, 2> B{};
    int n = 0;  // degree bound of the entries
};

// Planar replicator vector field P = x(x-1) f, Q = y(y-1) g with
// deg f, deg g <= d. The line factors are kept explicit so the four
// invariant lines evaluate to exactly zero; the expanded products are
// cached for the symbolic work (charts, homogeneous parts).
class EssField {
  public:
    EssField() = default;
    EssField(Poly2 f, Poly2 g, int d);

    int d() const { return d_; }
    const Poly2& f() const { return f_; }
    const Poly2& g() const { return g_; }
    const Poly2& P() const { return P_; }
    const Poly2& Q() const { return Q_; }

    // factored evaluation: exact zero on x in {0,1} / y in {0,1}
    double eval_P(double x, double y) const { return x * (x - 1.0) * f_.eval(x, y); }
    double eval_Q(double x, double y) const { return y * (y - 1.0) * g_.eval(x, y); }
    Vec2 at(double x, double y) const { return {eval_P(x, y), eval_Q(x, y)}; }

    // Jacobian of (P,Q) assembled from the factored product rule
    Mat2 jacobian(double x, double y) const;

    double divergence(double x, double y) const {
        const Mat2 J = jacobian(x, y);
        return J.a11 + J.a22;
    }

    // time reversal: -X, still in the same family
    EssField reversed() const { return EssField(-f_, -g_, d_); }

  private:
    int d_ = 0;
    Poly2 f_, g_, P_, Q_;
};

// Throws DegreeExceeded unless deg f <= d and deg g <= d.
EssField build_field(const Poly2& f, const Poly2& g, int d);

// Reduction of the payoff game to the planar field (degree bound n+1):
//   f = A22 - A12 + (A12 + A21 - A11 - A22) y
//   g = B22 - B12 + (B12 + B21 - B11 - B22) x
EssField reduce_game(const PayoffGame& game);

// Coefficient vector of (f, g) in graded-lex order (total degree
// ascending, then x-exponent ascending), f block before g block.
// Length is always (d+1)(d+2), absent coefficients are zero.
std::vector<double> coefficient_vector(const EssField& X);
EssField field_from_coefficients(int d, const std::vector<double>& v);

// The coefficient metric rho: Euclidean distance of coefficient vectors.
double distance(const EssField& X, const EssField& Y);

// Euclidean norm of the coefficient vector (rho-distance to the zero field).
double coefficient_norm(const EssField& X);

// X scaled so its coefficient norm is 1: the same orbits run at unit pace.
// Scale-invariant quantities (classifications, ratios, divergence
// integrals) are unchanged; times shrink by the returned factor.
EssField time_normalized(const EssField& X, double* scale_out = nullptr);

struct Trajectory4 {
    std::vector<double> t;
    std::vector<std::array<double, 4>> y;  // (x1, x2, y1, y2)
};

// Integrates the full four-variable replicator system, renormalizing each
// simplex pair to unit sum after every accepted step. Samples are taken at
// n_samples uniform times on [0, t_end].
Trajectory4 simulate_4d(const PayoffGame& game, std::array<double, 4> state0, double t_end,
                        int n_samples = 1001, double rel_tol = 1e-10, double abs_tol = 1e-12);

// Matching 2-D integration of an EssField, sampled the same way; the
// projection test compares this against simulate_4d.
std::vector<Vec2> integrate_planar(const EssField& X, Vec2 p0, double t_end, int n_samples = 1001,
                                   double rel_tol = 1e-10, double abs_tol = 1e-12);

}  // namespace essstab

#endif

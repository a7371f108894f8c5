#include "essstab/perturb.hpp"

#include <cmath>

#include "essstab/ode.hpp"

namespace essstab {

EssField rotate_family(const EssField& X, double eps, double lambda) {
    const double a = lambda * eps;
    const Poly2 f2 = X.f() - X.g() * a;
    const Poly2 g2 = X.g() + X.f() * a;
    return EssField(f2, g2, X.d());
}

Poly2 wedge_density(const EssField& X, double eps) {
    const Poly2 lx = Poly2::monomial(2, 0, 1.0) - Poly2::var_x();
    const Poly2 ly = Poly2::monomial(0, 2, 1.0) - Poly2::var_y();
    return lx * ly * (X.f() * X.f() + X.g() * X.g()) * eps;
}

namespace {

double min_abs_re(const Mat2& J) {
    const auto e = J.eigenvalues();
    return std::min(std::abs(e[0]), std::abs(e[2]));
}

// integrand exp(-w) H evaluated in log space, so exponential growth of the
// weight never overflows before the faster decay of H takes over
double weighted_h(const Poly2& H, double w, double x, double y) {
    const double hv = H.eval(x, y);
    if (hv == 0.0) return 0.0;
    const double lg = -w + std::log(std::abs(hv));
    if (lg < -745.0) return 0.0;
    return (hv > 0.0 ? 1.0 : -1.0) * std::exp(lg);
}

// integrates exp(-w) H along the orbit one way. Quadrature on a uniform
// grid pulled from the dense output; the coarse/fine trapezoid pair gives
// a Richardson extrapolation and its error estimate.
struct TailIntegral {
    double value = 0.0;      // extrapolated
    double estimate = 0.0;   // |fine - coarse| / 3
    double last_integrand = 0.0;
};

TailIntegral integrate_tail(const EssField& X, const Poly2& H, Vec2 x0, double t_end) {
    Dopri5<3>::Options opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    opt.h_max = 1e6;
    Dopri5<3> solver(
        [&X](double, const std::array<double, 3>& y) {
            const Vec2 v = X.at(y[0], y[1]);
            return std::array<double, 3>{v[0], v[1], X.divergence(y[0], y[1])};
        },
        opt);

    const double T = std::abs(t_end);
    const double dir = t_end >= 0.0 ? 1.0 : -1.0;
    const double dt = std::max(T / 4e5, 5e-4);  // fine-grid spacing

    // trapezoid accumulators on the fine grid and on every other point
    double fine = 0.0, coarse = 0.0;
    double prev_fine = weighted_h(H, 0.0, x0[0], x0[1]);
    double prev_coarse = prev_fine;
    double last = prev_fine;
    long idx = 0;

    solver.integrate(0.0, {x0[0], x0[1], 0.0}, t_end, [&](const Dopri5<3>::DenseStep& ds) {
        while (true) {
            const double t_next = dir * (idx + 1) * dt;
            if (dir * (t_next - ds.t1) > 1e-15) break;
            const auto y = ds.eval(t_next);
            const double val = weighted_h(H, y[2], y[0], y[1]);
            fine += 0.5 * (prev_fine + val) * dt;
            prev_fine = val;
            ++idx;
            if (idx % 2 == 0) {
                coarse += 0.5 * (prev_coarse + val) * (2.0 * dt);
                prev_coarse = val;
            }
            last = val;
        }
        return true;
    });

    // positive-weight accumulation: the backward leg already evaluates to
    // the integral over [-T, 0] without a sign flip
    TailIntegral out;
    out.value = (4.0 * fine - coarse) / 3.0;
    out.estimate = std::abs(fine - coarse) / 3.0;
    out.last_integrand = last;
    return out;
}

}  // namespace

MelnikovResult melnikov_derivative(const EssField& X, double eps, const SaddleConnection& conn) {
    MelnikovResult out;
    if (conn.inside_lambda) return out;  // the wedge vanishes on the whole orbit

    const double rate_src = min_abs_re(conn.source_jacobian);
    const double rate_tgt = min_abs_re(conn.target_jacobian);
    if (rate_src <= 0.0 || rate_tgt <= 0.0)
        throw TailNotDecaying("connection endpoints must be hyperbolic");

    const Poly2 H = wedge_density(X, eps);
    const double log_cut = std::log(1e14);
    out.t_forward = log_cut / rate_tgt;
    out.t_backward = log_cut / rate_src;

    const TailIntegral fwd = integrate_tail(X, H, conn.base_point, out.t_forward);
    const TailIntegral bwd = integrate_tail(X, H, conn.base_point, -out.t_backward);

    // backward leg accumulates over decreasing time; its value is already
    // signed as int_{-T}^{0} after the direction factor
    const double integral = fwd.value + bwd.value;
    out.integral = integral;
    out.richardson_error = (fwd.estimate + bwd.estimate) / (1.0 + std::abs(integral));
    if (out.richardson_error > 1e-6)
        throw QuadratureFailure("trapezoid refinement disagrees beyond 1e-6");

    const double peak = std::abs(H.eval(conn.base_point[0], conn.base_point[1]));
    if (std::abs(fwd.last_integrand) > 1e-10 * (1.0 + peak) ||
        std::abs(bwd.last_integrand) > 1e-10 * (1.0 + peak))
        throw TailNotDecaying("integrand envelope still large at the truncation time");

    const Vec2 v0 = X.at(conn.base_point[0], conn.base_point[1]);
    out.value = -integral / norm(v0);
    return out;
}

EssField algebraic_cycle_perturbation(const EssField& X, const Poly2& F, double eps, int delta1,
                                      int delta2) {
    const CofactorResult chk = check_invariant_algebraic_curve(X, F);
    if (!chk.invariant)
        throw NotInvariantCurve("F is not an invariant algebraic curve (residual " +
                                std::to_string(chk.residual) + ")");
    const Poly2 f2 = X.f() + F * F.partial('x') * (eps * delta1);
    const Poly2 g2 = X.g() + F * F.partial('y') * (eps * delta2);
    if (f2.degree() > X.d() || g2.degree() > X.d())
        throw DegreeExceeded("perturbed factors leave the degree class");
    return EssField(f2, g2, X.d());
}

double algebraic_cycle_r_shift(const EssField& X, const Poly2& F, double eps, int delta1,
                               int delta2, const LimitCycleRecord& cycle) {
    const CofactorResult chk = check_invariant_algebraic_curve(X, F);
    if (!chk.invariant) throw NotInvariantCurve("F is not invariant");

    const Poly2 Fx = F.partial('x'), Fy = F.partial('y');
    const Poly2 lx = Poly2::monomial(2, 0, 1.0) - Poly2::var_x();
    const Poly2 ly = Poly2::monomial(0, 2, 1.0) - Poly2::var_y();
    const Poly2 Ht = lx * Fx * Fx * static_cast<double>(delta1) +
                     ly * Fy * Fy * static_cast<double>(delta2);

    // quadrature of Ht along the cycle by re-integration from its fixed point
    Dopri5<3>::Options opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    opt.h_max = 1e6;
    Dopri5<3> solver(
        [&X, &Ht](double, const std::array<double, 3>& y) {
            const Vec2 v = X.at(y[0], y[1]);
            return std::array<double, 3>{v[0], v[1], Ht.eval(y[0], y[1])};
        },
        opt);
    const Vec2 p0 = cycle.section.point(cycle.s_star);
    const auto y = solver.integrate(0.0, {p0[0], p0[1], 0.0}, cycle.period);
    return eps * y[2];
}

}  // namespace essstab

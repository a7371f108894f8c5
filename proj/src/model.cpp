#include "essstab/model.hpp"

#include <cmath>

#include "essstab/ode.hpp"

namespace essstab {

EssField::EssField(Poly2 f, Poly2 g, int d) : d_(d), f_(std::move(f)), g_(std::move(g)) {
    const Poly2 lx = Poly2::monomial(2, 0, 1.0) - Poly2::var_x();  // x(x-1)
    const Poly2 ly = Poly2::monomial(0, 2, 1.0) - Poly2::var_y();  // y(y-1)
    P_ = lx * f_;
    Q_ = ly * g_;
}

Mat2 EssField::jacobian(double x, double y) const {
    const double lx = x * (x - 1.0), dlx = 2.0 * x - 1.0;
    const double ly = y * (y - 1.0), dly = 2.0 * y - 1.0;
    Mat2 J;
    J.a11 = dlx * f_.eval(x, y) + lx * f_.partial('x').eval(x, y);
    J.a12 = lx * f_.partial('y').eval(x, y);
    J.a21 = ly * g_.partial('x').eval(x, y);
    J.a22 = dly * g_.eval(x, y) + ly * g_.partial('y').eval(x, y);
    return J;
}

EssField build_field(const Poly2& f, const Poly2& g, int d) {
    if (d < 0) throw DegreeExceeded("degree bound must be nonnegative");
    if (f.degree() > d || g.degree() > d)
        throw DegreeExceeded("factor degree exceeds the declared bound d=" + std::to_string(d));
    return EssField(f, g, d);
}

EssField reduce_game(const PayoffGame& game) {
    const auto& A = game.A;
    const auto& B = game.B;
    const Poly2 f = A[1][1] - A[0][1] + (A[0][1] + A[1][0] - A[0][0] - A[1][1]) * Poly2::var_y();
    const Poly2 g = B[1][1] - B[0][1] + (B[0][1] + B[1][0] - B[0][0] - B[1][1]) * Poly2::var_x();
    return EssField(f, g, game.n + 1);
}

namespace {

// graded-lex monomial list for total degree <= d
std::vector<Mono> monomials_up_to(int d) {
    std::vector<Mono> out;
    for (int total = 0; total <= d; ++total)
        for (int i = 0; i <= total; ++i) out.push_back({i, total - i});
    return out;
}

}  // namespace

std::vector<double> coefficient_vector(const EssField& X) {
    const auto monos = monomials_up_to(X.d());
    std::vector<double> v;
    v.reserve(2 * monos.size());
    for (const auto& m : monos) v.push_back(X.f().coeff(m.i, m.j));
    for (const auto& m : monos) v.push_back(X.g().coeff(m.i, m.j));
    return v;
}

EssField field_from_coefficients(int d, const std::vector<double>& v) {
    const auto monos = monomials_up_to(d);
    if (v.size() != 2 * monos.size())
        throw MismatchedDegree("coefficient vector length does not match degree bound");
    Poly2 f, g;
    for (std::size_t k = 0; k < monos.size(); ++k) {
        f.set(monos[k].i, monos[k].j, v[k]);
        g.set(monos[k].i, monos[k].j, v[k + monos.size()]);
    }
    return EssField(f, g, d);
}

double distance(const EssField& X, const EssField& Y) {
    if (X.d() != Y.d()) throw MismatchedDegree("rho requires fields with the same degree bound");
    const auto vx = coefficient_vector(X), vy = coefficient_vector(Y);
    double s = 0.0;
    for (std::size_t k = 0; k < vx.size(); ++k) {
        const double dk = vx[k] - vy[k];
        s += dk * dk;
    }
    return std::sqrt(s);
}

double coefficient_norm(const EssField& X) {
    double s = 0.0;
    for (const auto& [m, c] : X.f().terms()) s += c * c;
    for (const auto& [m, c] : X.g().terms()) s += c * c;
    return std::sqrt(s);
}

EssField time_normalized(const EssField& X, double* scale_out) {
    double n = coefficient_norm(X);
    if (n < 1e-14) n = 1.0;
    if (scale_out) *scale_out = n;
    return EssField(X.f() * (1.0 / n), X.g() * (1.0 / n), X.d());
}

namespace {

std::array<double, 4> replicator_rhs(const PayoffGame& game, const std::array<double, 4>& s) {
    const double x1 = s[0], x2 = s[1], y1 = s[2], y2 = s[3];
    // payoff entries evaluated at the first-strategy weights (x, y) = (x1, y1)
    double A[2][2], B[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            A[i][j] = game.A[i][j].eval(x1, y1);
            B[i][j] = game.B[i][j].eval(x1, y1);
        }
    const double e1Ay = A[0][0] * y1 + A[0][1] * y2;
    const double e2Ay = A[1][0] * y1 + A[1][1] * y2;
    const double xAy = x1 * e1Ay + x2 * e2Ay;
    const double e1Bx = B[0][0] * x1 + B[0][1] * x2;
    const double e2Bx = B[1][0] * x1 + B[1][1] * x2;
    const double yBx = y1 * e1Bx + y2 * e2Bx;
    return {x1 * (e1Ay - xAy), x2 * (e2Ay - xAy), y1 * (e1Bx - yBx), y2 * (e2Bx - yBx)};
}

}  // namespace

Trajectory4 simulate_4d(const PayoffGame& game, std::array<double, 4> state0, double t_end,
                        int n_samples, double rel_tol, double abs_tol) {
    if (std::abs(state0[0] + state0[1] - 1.0) > 1e-12 ||
        std::abs(state0[2] + state0[3] - 1.0) > 1e-12)
        throw ToleranceFailure("initial state must lie on the product of simplices");

    Dopri5<4>::Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    Dopri5<4> solver([&game](double, const std::array<double, 4>& s) { return replicator_rhs(game, s); },
                     opt);
    solver.set_post_accept([](double, std::array<double, 4>& s) {
        const double sx = s[0] + s[1], sy = s[2] + s[3];
        if (std::abs(sx - 1.0) > 1e-6 || std::abs(sy - 1.0) > 1e-6)
            throw ToleranceFailure("simplex drift exceeded tolerance");
        s[0] /= sx;
        s[1] /= sx;
        s[2] /= sy;
        s[3] /= sy;
    });

    Trajectory4 out;
    out.t.resize(n_samples);
    out.y.resize(n_samples);
    for (int k = 0; k < n_samples; ++k)
        out.t[k] = t_end * static_cast<double>(k) / static_cast<double>(n_samples - 1);
    out.y[0] = state0;

    int next = 1;
    solver.integrate(0.0, state0, t_end, [&](const Dopri5<4>::DenseStep& ds) {
        while (next < n_samples && out.t[next] <= ds.t1 + 1e-15) {
            out.y[next] = ds.eval(std::min(out.t[next], ds.t1));
            ++next;
        }
        return true;
    });
    while (next < n_samples) {
        out.y[next] = out.y[next - 1];
        ++next;
    }
    return out;
}

std::vector<Vec2> integrate_planar(const EssField& X, Vec2 p0, double t_end, int n_samples,
                                   double rel_tol, double abs_tol) {
    Dopri5<2>::Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    Dopri5<2> solver([&X](double, const std::array<double, 2>& s) { return X.at(s[0], s[1]); },
                     opt);

    std::vector<double> times(n_samples);
    for (int k = 0; k < n_samples; ++k)
        times[k] = t_end * static_cast<double>(k) / static_cast<double>(n_samples - 1);

    std::vector<Vec2> out(n_samples);
    out[0] = p0;
    int next = 1;
    solver.integrate(0.0, {p0[0], p0[1]}, t_end, [&](const Dopri5<2>::DenseStep& ds) {
        while (next < n_samples && times[next] <= ds.t1 + 1e-15) {
            const auto s = ds.eval(std::min(times[next], ds.t1));
            out[next] = {s[0], s[1]};
            ++next;
        }
        return true;
    });
    while (next < n_samples) {
        out[next] = out[next - 1];
        ++next;
    }
    return out;
}

}  // namespace essstab

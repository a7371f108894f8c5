#ifndef ESSSTAB_ODE_HPP
#define ESSSTAB_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace essstab {

// Embedded Dormand-Prince 5(4) pair with the standard quartic dense output.
// State dimension is a compile-time constant; the fields analyzed here need
// N = 2 (plane), 3 (plane + divergence quadrature), 4 (full replicator).
template <std::size_t N>
class Dopri5 {
  public:
    using State = std::array<double, N>;
    using Rhs = std::function<State(double, const State&)>;

    struct Options {
        double rel_tol = 1e-10;
        double abs_tol = 1e-12;
        double h_init = 1e-3;
        double h_min = 1e-14;
        double h_max = 1.0;
        std::size_t max_steps = 20'000'000;
    };

    // One accepted step with its dense-output coefficients.
    struct DenseStep {
        double t0 = 0, t1 = 0;
        State y0{}, y1{};
        std::array<State, 5> d{};  // quartic interpolant coefficients

        State eval(double t) const {
            const double h = t1 - t0;
            const double th = (t - t0) / h;
            const double th1 = 1.0 - th;
            State out;
            for (std::size_t i = 0; i < N; ++i) {
                out[i] = d[0][i] +
                         th * (d[1][i] + th1 * (d[2][i] + th * (d[3][i] + th1 * d[4][i])));
            }
            return out;
        }
    };

    Dopri5(Rhs rhs, Options opt = {}) : rhs_(std::move(rhs)), opt_(opt) {}

    const Options& options() const { return opt_; }

    // Applied to the state after every accepted step (e.g. projecting back
    // onto an invariant manifold). Invalidates FSAL reuse, which the loop
    // handles by re-evaluating the right-hand side.
    void set_post_accept(std::function<void(double, State&)> fn) { post_accept_ = std::move(fn); }

    // Integrate from (t0, y0) to t_end. step_cb, when set, sees every
    // accepted step (with dense output) and may stop the run by returning
    // false. Returns the final state reached.
    State integrate(double t0, State y0, double t_end,
                    const std::function<bool(const DenseStep&)>& step_cb = {}) {
        double t = t0;
        State y = y0;
        const double dir = t_end >= t0 ? 1.0 : -1.0;
        double h = dir * std::clamp(std::abs(opt_.h_init), opt_.h_min, opt_.h_max);
        State k1 = rhs_(t, y);
        std::size_t steps = 0;

        while (dir * (t_end - t) > 0.0) {
            if (++steps > opt_.max_steps) throw std::runtime_error("dopri5: step budget exhausted");
            if (dir * (t + h - t_end) > 0.0) h = t_end - t;

            State k2, k3, k4, k5, k6, k7, y_new;
            double err = attempt(t, y, k1, h, k2, k3, k4, k5, k6, k7, y_new);
            if (err <= 1.0) {
                DenseStep ds = make_dense(t, y, y_new, h, k1, k3, k4, k5, k6, k7);
                t += h;
                y = y_new;
                if (post_accept_) {
                    post_accept_(t, y);
                    k1 = rhs_(t, y);
                } else {
                    k1 = k7;  // FSAL
                }
                if (step_cb && !step_cb(ds)) return y;
                h = next_step(h, err, dir);
            } else {
                h = next_step(h, err, dir);
                if (std::abs(h) < opt_.h_min)
                    throw std::runtime_error("dopri5: step size underflow");
            }
        }
        return y;
    }

  private:
    Rhs rhs_;
    Options opt_;
    std::function<void(double, State&)> post_accept_;

    double next_step(double h, double err, double dir) const {
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        const double f = std::clamp(fac, 0.2, 5.0);
        double nh = h * f;
        if (std::abs(nh) > opt_.h_max) nh = dir * opt_.h_max;
        return nh;
    }

    double attempt(double t, const State& y, const State& k1, double h, State& k2, State& k3,
                   State& k4, State& k5, State& k6, State& k7, State& y_new) {
        auto axpy = [&](std::initializer_list<std::pair<double, const State*>> terms) {
            State s = y;
            for (auto& [c, k] : terms)
                for (std::size_t i = 0; i < N; ++i) s[i] += h * c * (*k)[i];
            return s;
        };
        k2 = rhs_(t + h / 5.0, axpy({{1.0 / 5, &k1}}));
        k3 = rhs_(t + 3.0 * h / 10.0, axpy({{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
        k4 = rhs_(t + 4.0 * h / 5.0, axpy({{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
        k5 = rhs_(t + 8.0 * h / 9.0, axpy({{19372.0 / 6561, &k1},
                                           {-25360.0 / 2187, &k2},
                                           {64448.0 / 6561, &k3},
                                           {-212.0 / 729, &k4}}));
        k6 = rhs_(t + h, axpy({{9017.0 / 3168, &k1},
                               {-355.0 / 33, &k2},
                               {46732.0 / 5247, &k3},
                               {49.0 / 176, &k4},
                               {-5103.0 / 18656, &k5}}));
        y_new = axpy({{35.0 / 384, &k1},
                      {500.0 / 1113, &k3},
                      {125.0 / 192, &k4},
                      {-2187.0 / 6784, &k5},
                      {11.0 / 84, &k6}});
        k7 = rhs_(t + h, y_new);

        // embedded 4th-order error estimate
        static constexpr std::array<double, 7> e = {71.0 / 57600,   0.0,          -71.0 / 16695,
                                                    71.0 / 1920,    -17253.0 / 339200,
                                                    22.0 / 525,     -1.0 / 40};
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei = h * (e[0] * k1[i] + e[2] * k3[i] + e[3] * k4[i] + e[4] * k5[i] +
                                   e[5] * k6[i] + e[6] * k7[i]);
            const double sc =
                opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err += (ei / sc) * (ei / sc);
        }
        return std::sqrt(err / static_cast<double>(N));
    }

    DenseStep make_dense(double t, const State& y, const State& y_new, double h, const State& k1,
                         const State& k3, const State& k4, const State& k5, const State& k6,
                         const State& k7) const {
        static constexpr std::array<double, 7> dc = {
            -12715105075.0 / 11282082432.0, 0.0,
            87487479700.0 / 32700410799.0,  -10690763975.0 / 1880347072.0,
            701980252875.0 / 199316789632.0, -1453857185.0 / 822651844.0,
            69997945.0 / 29380423.0};
        DenseStep ds;
        ds.t0 = t;
        ds.t1 = t + h;
        ds.y0 = y;
        ds.y1 = y_new;
        for (std::size_t i = 0; i < N; ++i) {
            const double rcont5 = h * (dc[0] * k1[i] + dc[2] * k3[i] + dc[3] * k4[i] +
                                       dc[4] * k5[i] + dc[5] * k6[i] + dc[6] * k7[i]);
            const double ydiff = y_new[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            ds.d[0][i] = y[i];
            ds.d[1][i] = ydiff;
            ds.d[2][i] = bspl;
            ds.d[3][i] = ydiff - h * k7[i] - bspl;
            ds.d[4][i] = rcont5;
        }
        return ds;
    }
};

// Locates a zero of `event` inside a dense-output step by bisection on the
// interpolant. Assumes event(t_lo) and event(t_hi) have opposite signs.
template <std::size_t N>
double locate_event(const typename Dopri5<N>::DenseStep& ds,
                    const std::function<double(double, const std::array<double, N>&)>& event,
                    double t_lo, double t_hi, double tol = 1e-13) {
    double f_lo = event(t_lo, ds.eval(t_lo));
    for (int iter = 0; iter < 200; ++iter) {
        const double tm = 0.5 * (t_lo + t_hi);
        if (t_hi - t_lo <= tol * std::max(1.0, std::abs(tm))) return tm;
        const double fm = event(tm, ds.eval(tm));
        if (fm == 0.0) return tm;
        if ((fm > 0) == (f_lo > 0)) {
            t_lo = tm;
            f_lo = fm;
        } else {
            t_hi = tm;
        }
    }
    return 0.5 * (t_lo + t_hi);
}

}  // namespace essstab

#endif

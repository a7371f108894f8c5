#include "essstab/certify.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "essstab/ode.hpp"

namespace essstab {

std::string to_string(LimitLabel l) {
    switch (l) {
        case LimitLabel::Singularity: return "Singularity";
        case LimitLabel::LimitCycle: return "LimitCycle";
        case LimitLabel::PolycycleInLambda: return "PolycycleInLambda";
        case LimitLabel::Infinity: return "Infinity";
        case LimitLabel::Unresolved: return "Unresolved";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "Pass";
        case Verdict::Fail: return "Fail";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(StabilityCertificate::Overall o) {
    switch (o) {
        case StabilityCertificate::Overall::InPd: return "InPd";
        case StabilityCertificate::Overall::NotInPd: return "NotInPd";
        case StabilityCertificate::Overall::Inconclusive: return "Inconclusive";
    }
    return "?";
}

AnalysisInputs analyze_inputs(const EssField& X, const AnalysisOptions& opt) {
    AnalysisInputs in;
    in.X = X;
    in.finite = find_all_finite_singularities(X, opt.box, opt.tol_hyperbolic);
    try {
        in.infinity = infinity_singularities(X, opt.tol_hyperbolic);
    } catch (const NonIsolatedInfinity&) {
        in.infinity_degenerate = true;
    }
    in.polycycle = detect_square_polycycle(X, opt.tol_generic);

    bool a_ok = !in.infinity_degenerate && in.finite.degenerate_lines.empty();
    if (a_ok)
        for (const auto& s : in.finite.points) a_ok = a_ok && s.cls.hyperbolic;
    if (a_ok)
        for (const auto& s : in.infinity) a_ok = a_ok && s.cls.hyperbolic;

    if (opt.run_cycles && (!opt.economize || a_ok)) {
        ScanOptions so;
        so.sections = opt.scan_sections;
        so.tol_cycle_hyperbolic = opt.tol_cycle_hyperbolic;
        so.ret.t_max = opt.t_max;
        so.ret.rel_tol = std::min(opt.rel_tol, 1e-12);
        so.ret.abs_tol = std::min(opt.abs_tol, 1e-13);
        so.ret.domain = Box{opt.box.x0 - 1.0, opt.box.x1 + 1.0, opt.box.y0 - 1.0, opt.box.y1 + 1.0};
        in.cycles = find_limit_cycles(X, opt.box, so);
        in.cycles_ran = true;
    }
    return in;
}

namespace {

Vec2 eigenvector(const Mat2& J, double lambda) {
    const Vec2 r1{J.a11 - lambda, J.a12};
    const Vec2 r2{J.a21, J.a22 - lambda};
    const Vec2 r = norm(r1) >= norm(r2) ? r1 : r2;
    if (norm(r) < 1e-13 * (1.0 + J.frobenius())) return {1.0, 0.0};
    const Vec2 v{-r[1], r[0]};
    const double n = norm(v);
    return {v[0] / n, v[1] / n};
}

constexpr double kPlaneRadius = 12.0;  // beyond this the trace continues in charts
constexpr double kChartExit = 1.2 / kPlaneRadius;

struct Tracer {
    const AnalysisInputs& in;
    const AnalysisOptions& opt;
    EssField Xn;  // unit coefficient pace: budgets mean the same for all fields

    // saddle lists resolved once
    std::vector<int> finite_saddles;
    std::vector<int> infinity_saddles;

    explicit Tracer(const AnalysisInputs& inputs, const AnalysisOptions& options)
        : in(inputs), opt(options), Xn(time_normalized(inputs.X)) {
        for (std::size_t k = 0; k < in.finite.points.size(); ++k)
            if (in.finite.points[k].cls.kind == SingKind::HyperbolicSaddle)
                finite_saddles.push_back(static_cast<int>(k));
        for (std::size_t k = 0; k < in.infinity.size(); ++k)
            if (in.infinity[k].cls.kind == SingKind::HyperbolicSaddle)
                infinity_saddles.push_back(static_cast<int>(k));
    }

    // ---- proximity targets -------------------------------------------------

    int nearest_finite(const Vec2& p, double* dist_out) const {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t k = 0; k < in.finite.points.size(); ++k) {
            const auto& s = in.finite.points[k];
            const double d = std::hypot(p[0] - s.location[0], p[1] - s.location[1]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        if (dist_out) *dist_out = best_d;
        return best;
    }

    int nearest_infinity_in_chart(Chart chart, const Vec2& uv, double* dist_out) const {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t k = 0; k < in.infinity.size(); ++k) {
            const auto& s = in.infinity[k];
            double u_here;
            const bool same = (s.chart == chart);
            if (same) {
                u_here = s.u0;
            } else if (std::abs(s.u0) > 0.2) {
                u_here = 1.0 / s.u0;
            } else {
                continue;  // pole of the other chart, not visible here
            }
            const double d = std::hypot(uv[0] - u_here, uv[1]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        if (dist_out) *dist_out = best_d;
        return best;
    }

    double square_boundary_distance(const Vec2& p) const {
        const double dx = std::max({0.0 - p[0], p[0] - 1.0, 0.0});
        const double dy = std::max({0.0 - p[1], p[1] - 1.0, 0.0});
        if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
        // inside: distance to the nearest edge
        return std::min({p[0], 1.0 - p[0], p[1], 1.0 - p[1]});
    }

    double lambda_distance(const Vec2& p) const {
        double d = std::min(std::abs(p[0]), std::abs(p[0] - 1.0));
        d = std::min(d, std::min(std::abs(p[1]), std::abs(p[1] - 1.0)));
        return d;
    }

    // ---- invariant-line shortcut -------------------------------------------

    // flow along an invariant line from a saddle: the limit is the next
    // singularity on the line, or the polar direction at infinity
    TraceLimit line_limit(bool vertical, double fixed, double start, double direction,
                          std::vector<Vec2>& pts) const {
        TraceLimit lim;
        int best = -1;
        double best_pos = direction > 0 ? 1e300 : -1e300;
        for (std::size_t k = 0; k < in.finite.points.size(); ++k) {
            const auto& s = in.finite.points[k];
            const double along = vertical ? s.location[1] : s.location[0];
            const double cross_coord = vertical ? s.location[0] : s.location[1];
            if (std::abs(cross_coord - fixed) > 1e-9) continue;
            if (direction > 0 ? (along > start + 1e-9 && along < best_pos)
                              : (along < start - 1e-9 && along > best_pos)) {
                best_pos = along;
                best = static_cast<int>(k);
            }
        }
        const double far = direction > 0 ? kPlaneRadius : -kPlaneRadius;
        const double stop = best >= 0 ? best_pos : far;
        for (int k = 0; k <= 16; ++k) {
            const double a = start + (stop - start) * k / 16.0;
            pts.push_back(vertical ? Vec2{fixed, a} : Vec2{a, fixed});
        }
        if (best >= 0) {
            lim.label = LimitLabel::Singularity;
            lim.target = best;
            lim.final_distance = 0.0;
        } else {
            lim.label = LimitLabel::Infinity;
            lim.chart = vertical ? Chart::U2 : Chart::U1;
            lim.u0 = 0.0;
            lim.final_distance = 0.0;
        }
        return lim;
    }

    // ---- the general trace -------------------------------------------------

    struct Cursor {
        bool in_chart = false;
        Chart chart = Chart::U1;
        Vec2 p{};  // plane or chart coordinates
        // capture exclusion for the launching singularity until the trace
        // has genuinely left its neighborhood
        int src_finite = -1;
        int src_infinity = -1;
    };

    TraceLimit run(Cursor cur, double time_dir, std::vector<Vec2>& pts, bool& stayed_in_lambda,
                   double t_budget) const {
        bool left_source = cur.src_finite < 0 && cur.src_infinity < 0;
        const double leave_radius = 100.0 * opt.connection_threshold;
        // sink-capture bookkeeping (shrinking windings around an attractor)
        int sink_id = -1;
        double sink_angle = 0.0, sink_wind_max = 0.0;
        Vec2 sink_prev{};
        std::vector<double> sink_history;
        TraceLimit lim;
        const int n = Xn.d() + 2;
        const ChartField cf1 = chart_field(Xn, Chart::U1);
        const ChartField cf2 = chart_field(Xn, Chart::U2);

        double used = 0.0;
        stayed_in_lambda = true;
        double wind_angle = 0.0, wind_near_lambda_max = 0.0;
        Vec2 prev_plane{1e300, 1e300};
        std::vector<std::pair<double, int>> saddle_visits;  // (time, finite-saddle id)
        std::vector<double> lambda_dist_tail;

        // Chart time runs on its own clock: near the equator one plane unit
        // is worth ~1/v^(n-1) chart units, so charging chart legs against
        // the plane budget would starve the trace. Both clocks are bounded.
        double used_chart = 0.0;
        const double chart_budget = 100.0 * t_budget;
        const int max_legs = 64;
        for (int leg = 0; leg < max_legs && used < t_budget && used_chart < chart_budget; ++leg) {
            bool switched = false;
            if (!cur.in_chart) {
                // ---------------- plane leg ----------------
                Dopri5<2>::Options oo;
                oo.rel_tol = opt.rel_tol;
                oo.abs_tol = opt.abs_tol;
                oo.h_max = 1e6;
                Dopri5<2> solver(
                    [this](double, const std::array<double, 2>& y) {
                        const Vec2 v = Xn.at(y[0], y[1]);
                        return std::array<double, 2>{v[0], v[1]};
                    },
                    oo);
                double leg_end = time_dir * (t_budget - used);
                double last_t = 0.0;
                bool done = false;
                try {
                    solver.integrate(0.0, {cur.p[0], cur.p[1]}, leg_end,
                                     [&](const Dopri5<2>::DenseStep& ds) {
                        last_t = ds.t1;
                        const Vec2 p{ds.y1[0], ds.y1[1]};
                        if (pts.empty() ||
                            std::hypot(p[0] - pts.back()[0], p[1] - pts.back()[1]) > 1e-4)
                            pts.push_back(p);
                        if (pts.size() > 60000) pts.erase(pts.begin(), pts.begin() + 30000);

                        if (stayed_in_lambda && lambda_distance(p) > 1e-7)
                            stayed_in_lambda = false;

                        // singularity capture (the source is fair game again
                        // once the trace has moved away: homoclinic loops)
                        if (!left_source && cur.src_finite >= 0) {
                            const auto& src = in.finite.points[cur.src_finite];
                            if (std::hypot(p[0] - src.location[0], p[1] - src.location[1]) >
                                leave_radius)
                                left_source = true;
                        }
                        if (!left_source && cur.src_infinity >= 0) left_source = true;
                        double d_sing;
                        const int ns = nearest_finite(p, &d_sing);
                        // radius capture applies to non-saddle targets only:
                        // orbits squeezed onto an invariant line fly past the
                        // line saddles arbitrarily closely without limiting
                        // onto them
                        if (ns >= 0 && d_sing < opt.connection_threshold &&
                            in.finite.points[ns].cls.kind != SingKind::HyperbolicSaddle &&
                            (left_source || ns != cur.src_finite)) {
                            lim.label = LimitLabel::Singularity;
                            lim.target = ns;
                            lim.final_distance = d_sing;
                            done = true;
                            return false;
                        }
                        // sink capture: windings around a point that attracts
                        // in trace time (repellers attract backward traces)
                        // with strictly shrinking radius envelope converge
                        const Stability attracting_here =
                            time_dir > 0 ? Stability::Stable : Stability::Unstable;
                        if (ns >= 0 && d_sing < 0.5 &&
                            in.finite.points[ns].cls.stability == attracting_here &&
                            (left_source || ns != cur.src_finite)) {
                            const auto& tgt = in.finite.points[ns];
                            if (ns != sink_id) {
                                sink_id = ns;
                                sink_angle = 0.0;
                                sink_wind_max = d_sing;
                                sink_history.clear();
                                sink_prev = {p[0] - tgt.location[0], p[1] - tgt.location[1]};
                            } else {
                                const Vec2 rel{p[0] - tgt.location[0], p[1] - tgt.location[1]};
                                sink_angle += std::atan2(cross(sink_prev, rel), dot(sink_prev, rel));
                                sink_prev = rel;
                                sink_wind_max = std::max(sink_wind_max, d_sing);
                                if (std::abs(sink_angle) >= 2.0 * M_PI) {
                                    sink_history.push_back(sink_wind_max);
                                    if (sink_history.size() > 4)
                                        sink_history.erase(sink_history.begin());
                                    sink_angle = 0.0;
                                    sink_wind_max = d_sing;
                                    const std::size_t m2 = sink_history.size();
                                    if (m2 >= 3 && sink_history[m2 - 1] < sink_history[m2 - 2] &&
                                        sink_history[m2 - 2] < sink_history[m2 - 3] &&
                                        sink_history[m2 - 1] < 5e-2) {
                                        lim.label = LimitLabel::Singularity;
                                        lim.target = ns;
                                        lim.final_distance = d_sing;
                                        done = true;
                                        return false;
                                    }
                                }
                            }
                        } else if (sink_id >= 0 && (ns != sink_id || d_sing >= 0.5)) {
                            sink_id = -1;
                        }
                        // saddle flybys feed the polycycle reconstruction
                        if (ns >= 0 && d_sing < 0.1 &&
                            in.finite.points[ns].cls.kind == SingKind::HyperbolicSaddle) {
                            if (saddle_visits.empty() || saddle_visits.back().second != ns)
                                saddle_visits.push_back({used + time_dir * ds.t1, ns});
                        }
                        // cycle capture
                        for (std::size_t c = 0; c < in.cycles.cycles.size(); ++c) {
                            const auto& cyc = in.cycles.cycles[c].samples;
                            if (cyc.empty()) continue;
                            double dmin = 1e300;
                            for (std::size_t q = 0; q < cyc.size();
                                 q += std::max<std::size_t>(1, cyc.size() / 64))
                                dmin = std::min(dmin, std::hypot(p[0] - cyc[q][0], p[1] - cyc[q][1]));
                            if (dmin < opt.connection_threshold * 10.0) {
                                lim.label = LimitLabel::LimitCycle;
                                lim.target = static_cast<int>(c);
                                lim.final_distance = dmin;
                                done = true;
                                return false;
                            }
                        }
                        // winding bookkeeping for polycycle limits
                        if (prev_plane[0] < 1e299) {
                            const Vec2 a{prev_plane[0] - 0.5, prev_plane[1] - 0.5};
                            const Vec2 b{p[0] - 0.5, p[1] - 0.5};
                            const double da = std::atan2(cross(a, b), dot(a, b));
                            wind_angle += da;
                            wind_near_lambda_max =
                                std::max(wind_near_lambda_max, square_boundary_distance(p));
                            if (std::abs(wind_angle) > 4.0 * M_PI) {
                                if (wind_near_lambda_max < 1e-4 && in.polycycle.exists) {
                                    lim.label = LimitLabel::PolycycleInLambda;
                                    lim.polycycle_generic = in.polycycle.generic;
                                    lim.polycycle_ratio = in.polycycle.r_product;
                                    lim.polycycle_saddles = {0, 1, 2, 3};
                                    lim.final_distance = wind_near_lambda_max;
                                    done = true;
                                    return false;
                                }
                                wind_angle = 0.0;
                                wind_near_lambda_max = 0.0;
                            }
                        }
                        prev_plane = p;
                        lambda_dist_tail.push_back(lambda_distance(p));

                        if (std::hypot(p[0], p[1]) > kPlaneRadius) return false;  // chart switch
                        return true;
                    });
                } catch (const std::runtime_error&) {
                    break;  // integrator stall: label below from the tail
                }
                used += std::abs(last_t);
                if (done) return lim;
                const Vec2 p = pts.empty() ? cur.p : pts.back();
                if (std::hypot(p[0], p[1]) > kPlaneRadius) {
                    const bool use_u1 = std::abs(p[0]) >= std::abs(p[1]);
                    cur.chart = use_u1 ? Chart::U1 : Chart::U2;
                    cur.p = plane_to_chart(cur.chart, p[0], p[1]);
                    cur.in_chart = true;
                    switched = true;
                }
            } else {
                // ---------------- chart leg ----------------
                const ChartField& cf = (cur.chart == Chart::U1) ? cf1 : cf2;
                // the published chart expression carries v^(n-1); on v < 0 it
                // runs against plane time when n is even
                const double sign = (cur.p[1] >= 0.0 || (n - 1) % 2 == 0) ? 1.0 : -1.0;
                const double leg_dir = time_dir * sign;
                Dopri5<2>::Options oo;
                oo.rel_tol = opt.rel_tol;
                oo.abs_tol = opt.abs_tol;
                oo.h_max = 1e6;
                Dopri5<2> solver(
                    [&cf](double, const std::array<double, 2>& y) {
                        const Vec2 v = cf.at(y[0], y[1]);
                        return std::array<double, 2>{v[0], v[1]};
                    },
                    oo);
                double last_t = 0.0;
                bool done = false;
                Vec2 end = cur.p;
                try {
                    solver.integrate(0.0, {cur.p[0], cur.p[1]},
                                     leg_dir * (chart_budget - used_chart),
                                     [&](const Dopri5<2>::DenseStep& ds) {
                        last_t = ds.t1;
                        const Vec2 uv{ds.y1[0], ds.y1[1]};
                        end = uv;
                        stayed_in_lambda = stayed_in_lambda && std::abs(uv[1]) < 1e-7;
                        if (std::abs(uv[1]) > 1e-12) {
                            const Vec2 p = chart_to_plane(cur.chart, uv[0], uv[1]);
                            if (pts.empty() ||
                                std::hypot(p[0] - pts.back()[0], p[1] - pts.back()[1]) > 1e-3)
                                if (std::hypot(p[0], p[1]) < 4.0 * kPlaneRadius) pts.push_back(p);
                        }
                        if (!left_source && cur.src_infinity >= 0) {
                            const auto& src = in.infinity[cur.src_infinity];
                            double u_here = 1e300;
                            if (src.chart == cur.chart)
                                u_here = src.u0;
                            else if (std::abs(src.u0) > 0.2)
                                u_here = 1.0 / src.u0;
                            if (std::hypot(uv[0] - u_here, uv[1]) > leave_radius)
                                left_source = true;
                        }
                        if (!left_source && cur.src_finite >= 0) left_source = true;
                        double d_inf;
                        const int ni = nearest_infinity_in_chart(cur.chart, uv, &d_inf);
                        if (ni >= 0 && d_inf < opt.connection_threshold &&
                            (left_source || ni != cur.src_infinity)) {
                            lim.label = LimitLabel::Infinity;
                            lim.chart = in.infinity[ni].chart;
                            lim.u0 = in.infinity[ni].u0;
                            lim.target = ni;
                            lim.final_distance = d_inf;
                            done = true;
                            return false;
                        }
                        // far finite singularities are visible in the chart
                        if (std::abs(uv[1]) > 1e-9) {
                            const Vec2 p = chart_to_plane(cur.chart, uv[0], uv[1]);
                            double d_sing;
                            const int ns = nearest_finite(p, &d_sing);
                            const double rel = 1.0 + std::hypot(p[0], p[1]);
                            if (ns >= 0 && d_sing < opt.connection_threshold * rel) {
                                lim.label = LimitLabel::Singularity;
                                lim.target = ns;
                                lim.final_distance = d_sing;
                                done = true;
                                return false;
                            }
                        }
                        if (std::abs(uv[0]) > 1.25 || std::abs(uv[1]) > kChartExit) return false;
                        return true;
                    });
                } catch (const std::runtime_error&) {
                    break;
                }
                used_chart += std::abs(last_t);
                if (done) return lim;
                if (std::abs(end[1]) > kChartExit) {
                    const Vec2 p = chart_to_plane(cur.chart, end[0], end[1]);
                    cur.in_chart = false;
                    cur.p = p;
                    switched = true;
                } else if (std::abs(end[0]) > 1.25) {
                    const Chart other = (cur.chart == Chart::U1) ? Chart::U2 : Chart::U1;
                    cur.p = {1.0 / end[0], end[1] / end[0]};
                    cur.chart = other;
                    cur.in_chart = true;
                    switched = true;
                }
            }
            if (!switched) break;  // budget exhausted inside a leg
        }

        // budget exhausted: classify from the tail
        const std::size_t m = lambda_dist_tail.size();
        if (m > 20) {
            const std::size_t tail = m / 5;
            double max_tail = 0.0;
            for (std::size_t k = m - tail; k < m; ++k)
                max_tail = std::max(max_tail, lambda_dist_tail[k]);
            if (max_tail < 1e-3 && !saddle_visits.empty()) {
                // orbit hugging Lambda past several saddles: reconstruct the
                // polycycle it winds onto
                std::vector<int> ring;
                for (const auto& [t, id] : saddle_visits) {
                    (void)t;
                    if (std::find(ring.begin(), ring.end(), id) == ring.end()) ring.push_back(id);
                }
                lim.label = LimitLabel::PolycycleInLambda;
                lim.polycycle_saddles = ring;
                double ratio = 1.0;
                bool all_hyp = true;
                for (int id : ring) {
                    const auto& s = in.finite.points[id];
                    const auto e = s.jacobian.eigenvalues();
                    const double mu = std::min(e[0], e[2]), nu = std::max(e[0], e[2]);
                    if (nu <= 0.0 || mu >= 0.0) {
                        all_hyp = false;
                        break;
                    }
                    ratio *= std::abs(mu) / nu;
                }
                const bool is_square = in.polycycle.exists && ring.size() == 4;
                lim.extended_cherkas = !is_square;
                lim.polycycle_ratio = is_square ? in.polycycle.r_product : ratio;
                lim.polycycle_generic =
                    all_hyp && std::abs(lim.polycycle_ratio - 1.0) > opt.tol_generic;
                lim.final_distance = max_tail;
                return lim;
            }
        }
        if (!pts.empty()) {
            double d_sing;
            const int ns = nearest_finite(pts.back(), &d_sing);
            const bool tgt_saddle =
                ns >= 0 && in.finite.points[ns].cls.kind == SingKind::HyperbolicSaddle;
            const bool tgt_attracting =
                ns >= 0 && in.finite.points[ns].cls.stability ==
                               (time_dir > 0 ? Stability::Stable : Stability::Unstable);
            // monotone approach over the stored tail; saddles demand a much
            // closer final distance (a slow flyby can look monotone)
            const double close_enough = tgt_saddle ? 1e-3 : (tgt_attracting ? 5e-2 : 1e-3);
            if (ns >= 0 && d_sing < close_enough) {
                bool monotone = true;
                const std::size_t take = std::min<std::size_t>(pts.size(), 50);
                double prev = 1e300;
                for (std::size_t k = pts.size() - take; k < pts.size(); k += 5) {
                    const auto& s = in.finite.points[ns];
                    const double d =
                        std::hypot(pts[k][0] - s.location[0], pts[k][1] - s.location[1]);
                    if (d > prev * 1.5) monotone = false;
                    prev = d;
                }
                if (monotone) {
                    lim.label = LimitLabel::Singularity;
                    lim.target = ns;
                    lim.final_distance = d_sing;
                    return lim;
                }
            }
        }
        lim.label = LimitLabel::Unresolved;
        return lim;
    }

    SeparatrixTrace trace_finite_branch(int saddle_id, bool unstable, int branch_sign) const {
        SeparatrixTrace tr;
        tr.saddle = saddle_id;
        tr.unstable = unstable;
        tr.branch = branch_sign > 0 ? 0 : 1;

        const Singularity& s = in.finite.points[saddle_id];
        const auto e = s.jacobian.eigenvalues();
        const double lam = unstable ? std::max(e[0], e[2]) : std::min(e[0], e[2]);
        const Vec2 v = eigenvector(s.jacobian, lam);
        const Vec2 start{s.location[0] + branch_sign * opt.trace_delta0 * v[0],
                         s.location[1] + branch_sign * opt.trace_delta0 * v[1]};

        // branches launched along an invariant line stay on it; resolve them
        // by the one-dimensional dynamics instead of integrating. The branch
        // leaves the saddle in its own offset direction: |delta(t)| grows
        // along every separatrix in trace time, so no flow probe is needed
        // (and a probe could land beyond a neighboring line singularity).
        const double lt = 1e-9;
        for (int axis = 0; axis < 2; ++axis) {
            for (double fixed : {0.0, 1.0}) {
                const bool on_line = std::abs(s.location[axis] - fixed) < lt;
                const bool along = std::abs(v[axis]) < 1e-9;
                if (on_line && along) {
                    const bool vertical = (axis == 0);
                    const double here = s.location[axis ? 0 : 1];
                    tr.in_lambda = true;
                    tr.limit = line_limit(vertical, fixed, here, branch_sign, tr.points);
                    return tr;
                }
            }
        }

        // hop along the eigenline past the linear zone: the orbit through
        // delta0 and the one through r0 lie on the same local manifold up to
        // O(r0^2), and the hop saves ln(r0/delta0)/|lambda| of crawl time.
        // Clamped below the gap to the nearest other singularity.
        double gap = 1e300;
        for (std::size_t k = 0; k < in.finite.points.size(); ++k) {
            if (static_cast<int>(k) == saddle_id) continue;
            const auto& q = in.finite.points[k].location;
            gap = std::min(gap, std::hypot(q[0] - s.location[0], q[1] - s.location[1]));
        }
        const double r0 = std::max(
            opt.trace_delta0, std::min(1e-3 * (1.0 + norm(s.location)), 0.3 * gap));
        Cursor cur;
        cur.p = {s.location[0] + branch_sign * r0 * v[0], s.location[1] + branch_sign * r0 * v[1]};
        cur.src_finite = saddle_id;
        tr.points.push_back(s.location);
        tr.points.push_back(start);
        bool in_lambda = true;
        tr.limit = run(cur, unstable ? 1.0 : -1.0, tr.points, in_lambda, opt.t_max);
        tr.in_lambda = in_lambda && lambda_distance(start) < 1e-7 && lambda_distance(cur.p) < 1e-7;
        return tr;
    }

    SeparatrixTrace trace_infinity_branch(int inf_id) const {
        SeparatrixTrace tr;
        tr.infinity_saddle = inf_id;
        const InfinitySingularity& s = in.infinity[inf_id];
        // transversal direction: eigenvector of the normal eigenvalue, with
        // the same linear-zone hop as for finite saddles
        const Vec2 w = eigenvector(s.jacobian, s.eig_normal);
        const double wv = std::abs(w[1]) > 1e-12 ? w[1] : 1.0;
        double gap = 1e300;
        for (std::size_t k = 0; k < in.infinity.size(); ++k) {
            if (static_cast<int>(k) == inf_id || in.infinity[k].chart != s.chart) continue;
            gap = std::min(gap, std::abs(in.infinity[k].u0 - s.u0));
        }
        const double r0 = std::max(opt.trace_delta0, std::min(1e-4, 0.3 * gap));
        const Vec2 start{s.u0 + r0 * w[0] / wv, r0};
        tr.unstable = s.eig_normal > 0.0;

        Cursor cur;
        cur.in_chart = true;
        cur.chart = s.chart;
        cur.p = start;
        cur.src_infinity = inf_id;
        bool in_lambda = true;
        tr.limit = run(cur, tr.unstable ? 1.0 : -1.0, tr.points, in_lambda, opt.t_max);
        tr.in_lambda = false;  // leaves the equator by construction
        return tr;
    }
};

}  // namespace

SeparatrixSkeleton trace_separatrices(const AnalysisInputs& in, const AnalysisOptions& opt) {
    SeparatrixSkeleton skel;
    Tracer tracer(in, opt);
    for (int id : tracer.finite_saddles) {
        for (bool unstable : {true, false})
            for (int sign : {+1, -1})
                skel.traces.push_back(tracer.trace_finite_branch(id, unstable, sign));
    }
    for (int id : tracer.infinity_saddles)
        skel.traces.push_back(tracer.trace_infinity_branch(id));
    return skel;
}

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab{b[0] - a[0], b[1] - a[1]};
    const Vec2 ap{p[0] - a[0], p[1] - a[1]};
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
    return std::hypot(ap[0] - t * ab[0], ap[1] - t * ab[1]);
}

// Closest approach of the two traces outside the saddle neighborhoods and
// away from the invariant set. Every trace of a saddle starts next to it,
// orbit pairs squeeze exponentially onto the invariant lines and onto the
// equator, so proximity in those zones carries no information; only
// midsection proximity in the open region signals a connection. Distances
// go point-to-segment: the two traces sample the curve at unrelated
// parameters.
double min_pair_distance(const SeparatrixTrace& a, const SeparatrixTrace& b,
                         const std::vector<Vec2>& saddle_locs, double r_excl) {
    if (a.points.empty() || b.points.size() < 2) return 1e300;
    auto excluded = [&](const Vec2& p) {
        for (const auto& q : saddle_locs)
            if (std::hypot(p[0] - q[0], p[1] - q[1]) < r_excl) return true;
        double lam = std::min(std::abs(p[0]), std::abs(p[0] - 1.0));
        lam = std::min(lam, std::min(std::abs(p[1]), std::abs(p[1] - 1.0)));
        if (lam < 1e-3) return true;               // invariant-line squeeze zone
        if (std::hypot(p[0], p[1]) > 10.0) return true;  // equator squeeze zone
        return false;
    };
    double best = 1e300;
    const std::size_t stride_a = std::max<std::size_t>(1, a.points.size() / 300);
    for (std::size_t i = 0; i < a.points.size(); i += stride_a) {
        if (excluded(a.points[i])) continue;
        for (std::size_t j = 0; j + 1 < b.points.size(); ++j) {
            if (excluded(b.points[j]) && excluded(b.points[j + 1])) continue;
            best = std::min(best, point_segment_distance(a.points[i], b.points[j],
                                                         b.points[j + 1]));
        }
    }
    return best;
}

SeparatrixTrace retrace(const Tracer& tracer, const SeparatrixTrace& t) {
    if (t.saddle >= 0)
        return tracer.trace_finite_branch(t.saddle, t.unstable, t.branch == 0 ? +1 : -1);
    return tracer.trace_infinity_branch(t.infinity_saddle);
}

}  // namespace

StabilityCertificate assemble_certificate(const AnalysisInputs& in, const SeparatrixSkeleton& skel,
                                          const AnalysisOptions& opt) {
    StabilityCertificate cert;

    // ---------- (a') all singularities hyperbolic ----------
    {
        ConditionResult& r = cert.a_prime;
        r.verdict = Verdict::Pass;
        cert.hyperbolic_margin = 1e300;
        if (in.infinity_degenerate) {
            r.verdict = Verdict::Fail;
            r.reason = "equator restriction vanishes identically (continuum at infinity)";
        }
        if (r.verdict == Verdict::Pass && !in.finite.degenerate_lines.empty()) {
            r.verdict = Verdict::Fail;
            r.reason = "continuum of singularities on " + in.finite.degenerate_lines.front();
        }
        if (r.verdict == Verdict::Pass)
            for (const auto& s : in.finite.points) {
                cert.hyperbolic_margin =
                    std::min(cert.hyperbolic_margin, s.cls.min_abs_re / s.cls.tol);
                if (!s.cls.hyperbolic) {
                    r.verdict = Verdict::Fail;
                    r.reason = to_string(s.cls.kind) + " at (" + std::to_string(s.location[0]) +
                               ", " + std::to_string(s.location[1]) + ")";
                    break;
                }
            }
        if (r.verdict == Verdict::Pass)
            for (const auto& s : in.infinity) {
                cert.hyperbolic_margin =
                    std::min(cert.hyperbolic_margin, s.cls.min_abs_re / s.cls.tol);
                if (!s.cls.hyperbolic) {
                    r.verdict = Verdict::Fail;
                    r.reason = to_string(s.cls.kind) + " at infinity (" + to_string(s.chart) +
                               ", u0=" + std::to_string(s.u0) + ")";
                    break;
                }
            }
        if (r.verdict == Verdict::Pass && !in.finite.unresolved_boxes.empty()) {
            r.verdict = Verdict::Inconclusive;
            r.reason = "unresolved subdivision cells (near-degenerate field)";
        }
        if (r.verdict == Verdict::Pass) r.reason = "all singularities hyperbolic";
    }

    // ---------- (b') closed orbits hyperbolic ----------
    {
        ConditionResult& r = cert.b_prime;
        cert.cycle_margin = 1e300;
        if (!in.cycles_ran) {
            r.verdict = Verdict::Inconclusive;
            r.reason = "cycle scan skipped";
        } else if (in.cycles.non_isolated_band) {
            r.verdict = Verdict::Fail;
            r.reason = "band of closed orbits detected (displacement ~ 0 across scan)";
        } else {
            r.verdict = Verdict::Pass;
            for (const auto& c : in.cycles.cycles) {
                cert.cycle_margin =
                    std::min(cert.cycle_margin, std::abs(c.r_gamma) / opt.tol_cycle_hyperbolic);
                if (c.verdict == CycleVerdict::NonHyperbolicSuspect) {
                    r.verdict = Verdict::Fail;
                    r.reason = "cycle with |r(gamma)| = " + std::to_string(std::abs(c.r_gamma)) +
                               " below tolerance";
                    break;
                }
            }
            if (r.verdict == Verdict::Pass && in.cycles.scan_gaps > 0) {
                r.verdict = Verdict::Inconclusive;
                r.reason = std::to_string(in.cycles.scan_gaps) + " scan gaps (no return)";
            }
            if (r.verdict == Verdict::Pass)
                r.reason = std::to_string(in.cycles.cycles.size()) +
                           " cycle(s), all hyperbolic at scan resolution " +
                           std::to_string(in.cycles.sections);
        }
    }

    // ---------- (c) saddle connections confined to Lambda ----------
    {
        ConditionResult& r = cert.c;
        if (skel.traces.empty()) {
            r.verdict = Verdict::Inconclusive;
            r.reason = "separatrix tracing skipped";
        } else {
            r.verdict = Verdict::Pass;
            r.reason = "no off-Lambda saddle connection detected";
            bool any_unresolved = false;
            for (const auto& tr : skel.traces)
                if (tr.limit.label == LimitLabel::Unresolved) any_unresolved = true;

            // mutual proximity of unstable and stable families, refined by a
            // second shot at smaller launch offset before declaring a hit
            if (r.verdict == Verdict::Pass) {
                std::vector<Vec2> saddle_locs;
                for (const auto& p : in.finite.points)
                    if (p.cls.kind == SingKind::HyperbolicSaddle) saddle_locs.push_back(p.location);
                const double r_excl = 1e-2;

                AnalysisOptions fine = opt;
                fine.trace_delta0 = opt.trace_delta0 / 30.0;
                fine.rel_tol = opt.rel_tol * 1e-2;
                fine.abs_tol = opt.abs_tol * 1e-2;
                Tracer refiner(in, fine);

                for (const auto& u : skel.traces) {
                    if (!u.unstable || u.in_lambda) continue;
                    for (const auto& s : skel.traces) {
                        if (s.unstable || s.in_lambda) continue;
                        if (min_pair_distance(u, s, saddle_locs, r_excl) >=
                            opt.connection_threshold)
                            continue;
                        const SeparatrixTrace u2 = retrace(refiner, u);
                        const SeparatrixTrace s2 = retrace(refiner, s);
                        if (min_pair_distance(u2, s2, saddle_locs, r_excl) <
                            opt.connection_threshold) {
                            r.verdict = Verdict::Fail;
                            r.reason = "unstable/stable separatrix pair within " +
                                       std::to_string(opt.connection_threshold);
                            break;
                        }
                    }
                    if (r.verdict == Verdict::Fail) break;
                }
            }
            if (r.verdict == Verdict::Pass && any_unresolved) {
                r.verdict = Verdict::Inconclusive;
                r.reason = "unresolved separatrix traces";
            }
        }
    }

    // ---------- (d') limit sets ----------
    {
        ConditionResult& r = cert.d_prime;
        r.verdict = Verdict::Pass;
        r.reason = "all traced limit sets admissible";
        cert.polycycle_margin = 1e300;
        if (in.polycycle.exists) {
            cert.polycycle_margin = std::abs(in.polycycle.r_product - 1.0) / opt.tol_generic;
            if (!in.polycycle.generic) {
                r.verdict = Verdict::Fail;
                r.reason = "non-generic polycycle in Lambda (r = " +
                           std::to_string(in.polycycle.r_product) + ")";
            }
        }
        if (r.verdict == Verdict::Pass) {
            bool any_unresolved = false;
            for (const auto& tr : skel.traces) {
                switch (tr.limit.label) {
                    case LimitLabel::Singularity:
                    case LimitLabel::Infinity:
                    case LimitLabel::LimitCycle:
                        break;
                    case LimitLabel::PolycycleInLambda:
                        if (!tr.limit.polycycle_generic) {
                            r.verdict = Verdict::Fail;
                            r.reason = tr.limit.extended_cherkas
                                           ? "orbit limits onto a non-generic extended polycycle"
                                           : "orbit limits onto the non-generic square polycycle";
                        }
                        break;
                    case LimitLabel::Unresolved:
                        any_unresolved = true;
                        break;
                }
                if (r.verdict == Verdict::Fail) break;
            }
            if (r.verdict == Verdict::Pass && skel.traces.empty() && !in.finite.points.empty()) {
                // no saddles at all: limit sets are nodes/foci/cycles; nothing to check
                r.reason = "no saddles: limit sets checked through cycles and singularities";
            }
            if (r.verdict == Verdict::Pass && any_unresolved) {
                r.verdict = Verdict::Inconclusive;
                r.reason = "unresolved trace limits";
            }
        }
    }

    const bool any_fail = cert.a_prime.verdict == Verdict::Fail ||
                          cert.b_prime.verdict == Verdict::Fail ||
                          cert.c.verdict == Verdict::Fail || cert.d_prime.verdict == Verdict::Fail;
    const bool all_pass = cert.a_prime.verdict == Verdict::Pass &&
                          cert.b_prime.verdict == Verdict::Pass &&
                          cert.c.verdict == Verdict::Pass && cert.d_prime.verdict == Verdict::Pass;
    cert.overall = any_fail ? StabilityCertificate::Overall::NotInPd
                 : all_pass ? StabilityCertificate::Overall::InPd
                            : StabilityCertificate::Overall::Inconclusive;
    return cert;
}

StabilityCertificate check_membership(const EssField& X, const AnalysisOptions& opt) {
    AnalysisInputs in = analyze_inputs(X, opt);
    SeparatrixSkeleton skel;
    bool a_ok = !in.infinity_degenerate && in.finite.degenerate_lines.empty();
    if (a_ok)
        for (const auto& s : in.finite.points) a_ok = a_ok && s.cls.hyperbolic;
    if (a_ok)
        for (const auto& s : in.infinity) a_ok = a_ok && s.cls.hyperbolic;
    if (opt.run_traces && (!opt.economize || a_ok)) skel = trace_separatrices(in, opt);
    return assemble_certificate(in, skel, opt);
}

EssField sample_field_in_ball(int d, double radius, SplitMix64& rng) {
    const int dim = (d + 1) * (d + 2);
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (double& x : v) {
        x = rng.normal();
        n2 += x * x;
    }
    const double r = radius * std::pow(rng.next_double(), 1.0 / dim) / std::sqrt(n2);
    for (double& x : v) x *= r;
    return field_from_coefficients(d, v);
}

namespace {

SampleOutcome run_sample(const DensityOptions& opt, std::uint64_t index) {
    SplitMix64 rng = SplitMix64::substream(opt.seed, index);
    const EssField X = sample_field_in_ball(opt.d, opt.radius, rng);

    SampleOutcome out;
    AnalysisInputs in = analyze_inputs(X, opt.pipeline);
    bool a_ok = !in.infinity_degenerate && in.finite.degenerate_lines.empty();
    for (const auto& s : in.finite.points) {
        if (!s.cls.hyperbolic) out.nonhyperbolic_singularity = true;
        a_ok = a_ok && s.cls.hyperbolic;
    }
    for (const auto& s : in.infinity) {
        if (!s.cls.hyperbolic) out.nonhyperbolic_singularity = true;
        a_ok = a_ok && s.cls.hyperbolic;
    }
    if (in.infinity_degenerate || !in.finite.degenerate_lines.empty())
        out.nonhyperbolic_singularity = true;
    if (in.polycycle.exists && !in.polycycle.generic) out.near_generic_polycycle = true;
    out.cycle_count = static_cast<int>(in.cycles.cycles.size());

    SeparatrixSkeleton skel;
    if (opt.pipeline.run_traces && (!opt.pipeline.economize || a_ok))
        skel = trace_separatrices(in, opt.pipeline);
    const StabilityCertificate cert = assemble_certificate(in, skel, opt.pipeline);
    out.overall = cert.overall;
    out.a_prime = cert.a_prime.verdict;
    out.b_prime = cert.b_prime.verdict;
    out.c = cert.c.verdict;
    out.d_prime = cert.d_prime.verdict;
    out.hyperbolic_margin = cert.hyperbolic_margin;
    out.polycycle_margin = cert.polycycle_margin;
    out.cycle_margin = cert.cycle_margin;
    return out;
}

DensityStats aggregate(const DensityOptions& opt, std::vector<SampleOutcome> outcomes) {
    DensityStats st;
    st.n = opt.samples;
    st.seed = opt.seed;
    st.radius = opt.radius;
    for (const auto& o : outcomes) {
        switch (o.overall) {
            case StabilityCertificate::Overall::InPd: ++st.in_pd; break;
            case StabilityCertificate::Overall::NotInPd: ++st.not_in_pd; break;
            case StabilityCertificate::Overall::Inconclusive: ++st.inconclusive; break;
        }
        if (o.a_prime == Verdict::Fail) ++st.fail_a;
        if (o.b_prime == Verdict::Fail) ++st.fail_b;
        if (o.c == Verdict::Fail) ++st.fail_c;
        if (o.d_prime == Verdict::Fail) ++st.fail_d;
        if (o.nonhyperbolic_singularity) ++st.nonhyperbolic;
        if (o.near_generic_polycycle) ++st.near_generic;
        st.max_cycles_per_field = std::max(st.max_cycles_per_field, o.cycle_count);
    }
    st.outcomes = std::move(outcomes);
    return st;
}

}  // namespace

DensityStats density_experiment(const DensityOptions& opt) {
    if (opt.samples < 1) throw std::invalid_argument("density experiment needs at least 1 sample");
    std::vector<SampleOutcome> outcomes(opt.samples);
#ifdef _OPENMP
    if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
#endif
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < opt.samples; ++k)
        outcomes[k] = run_sample(opt, static_cast<std::uint64_t>(k));
    return aggregate(opt, std::move(outcomes));
}

DensityStats density_experiment_serial(const DensityOptions& opt) {
    if (opt.samples < 1) throw std::invalid_argument("density experiment needs at least 1 sample");
    std::vector<SampleOutcome> outcomes(opt.samples);
    for (int k = 0; k < opt.samples; ++k)
        outcomes[k] = run_sample(opt, static_cast<std::uint64_t>(k));
    return aggregate(opt, std::move(outcomes));
}

bool openness_probe(const EssField& X, const AnalysisOptions& opt, int k, double rho,
                    std::uint64_t seed) {
    const auto base = coefficient_vector(X);
    const int dim = static_cast<int>(base.size());
    for (int trial = 0; trial < k; ++trial) {
        SplitMix64 rng = SplitMix64::substream(seed, static_cast<std::uint64_t>(trial) + 7777);
        std::vector<double> dir(dim);
        double n2 = 0.0;
        for (double& x : dir) {
            x = rng.normal();
            n2 += x * x;
        }
        std::vector<double> v = base;
        for (int i = 0; i < dim; ++i) v[i] += rho * dir[i] / std::sqrt(n2);
        const EssField Y = field_from_coefficients(X.d(), v);
        if (check_membership(Y, opt).overall != StabilityCertificate::Overall::InPd) return false;
    }
    return true;
}

}  // namespace essstab

#include "essstab/cycles.hpp"

#include <algorithm>
#include <cmath>

#include "essstab/ode.hpp"

namespace essstab {

Flow2 make_flow(const EssField& X) {
    Flow2 f;
    f.v = [X](double x, double y) { return X.at(x, y); };
    f.div = [X](double x, double y) { return X.divergence(x, y); };
    return f;
}

Flow2 reverse_flow(const Flow2& flow) {
    Flow2 r;
    r.v = [v = flow.v](double x, double y) {
        const Vec2 w = v(x, y);
        return Vec2{-w[0], -w[1]};
    };
    r.div = [d = flow.div](double x, double y) { return -d(x, y); };
    return r;
}

bool Section::transversal(const Flow2& flow) const {
    const Vec2 n = normal();
    for (int k = 0; k < 32; ++k) {
        const double s = -half_length + 2.0 * half_length * k / 31.0;
        const Vec2 p = point(s);
        const Vec2 v = flow.v(p[0], p[1]);
        if (std::abs(dot(v, n)) <= 1e-6 * norm(v)) return false;
    }
    return true;
}

namespace {

struct CrossingSearch {
    const Flow2& flow;
    const Section& section;
    const ReturnOptions& opt;
    double start_dir = 0.0;  // sign of the normal velocity at departure
    double t_found = -1.0;
    Vec2 p_found{};
    bool left_domain = false;

    // scans one dense step for the first same-direction crossing of the
    // section line that lands within the segment span
    template <typename DS>
    bool inspect(const DS& ds) {
        constexpr int sub = 8;
        double t_prev = ds.t0;
        auto at = [&](double t) { return ds.eval(t); };
        double e_prev = section.offset({at(t_prev)[0], at(t_prev)[1]});
        for (int k = 1; k <= sub; ++k) {
            const double t = ds.t0 + (ds.t1 - ds.t0) * k / sub;
            const auto y = at(t);
            if (!opt.domain.contains(y[0], y[1])) {
                left_domain = true;
                return false;
            }
            const double e = section.offset({y[0], y[1]});
            if (e_prev != 0.0 && e * e_prev < 0.0) {
                // crossing inside (t_prev, t); check direction and span
                const double tc = locate_event<2>(
                    ds,
                    [this](double, const std::array<double, 2>& q) {
                        return section.offset({q[0], q[1]});
                    },
                    t_prev, t);
                const auto yc = at(tc);
                const Vec2 pc{yc[0], yc[1]};
                const Vec2 vel = flow.v(pc[0], pc[1]);
                const double vn = dot(vel, section.normal());
                if (vn * start_dir > 0.0 && std::abs(section.coord(pc)) <= section.half_length) {
                    t_found = tc;
                    p_found = pc;
                    return false;
                }
            }
            e_prev = e;
            t_prev = t;
        }
        return true;
    }
};

}  // namespace

ReturnResult return_map(const Flow2& flow, const Section& section, double s,
                        const ReturnOptions& opt) {
    ReturnResult out;
    const Vec2 p0 = section.point(s);
    const Vec2 v0 = flow.v(p0[0], p0[1]);
    const double vn0 = dot(v0, section.normal());
    if (std::abs(vn0) <= 1e-12 * (1.0 + norm(v0))) return out;  // tangent start: no usable return

    Dopri5<2>::Options oopt;
    oopt.rel_tol = opt.rel_tol;
    oopt.abs_tol = opt.abs_tol;
    oopt.h_max = 1e6;
    Dopri5<2> solver(
        [&flow](double, const std::array<double, 2>& y) {
            const Vec2 v = flow.v(y[0], y[1]);
            return std::array<double, 2>{v[0], v[1]};
        },
        oopt);

    CrossingSearch search{flow, section, opt, vn0 > 0 ? 1.0 : -1.0, -1.0, {}, false};
    try {
        solver.integrate(0.0, {p0[0], p0[1]}, opt.t_max,
                         [&search](const Dopri5<2>::DenseStep& ds) { return search.inspect(ds); });
    } catch (const std::runtime_error&) {
        return out;  // stiffness/step-budget treated as NoReturn
    }
    if (search.left_domain) {
        out.status = ReturnStatus::LeftDomain;
        return out;
    }
    if (search.t_found < 0.0) return out;
    out.status = ReturnStatus::Ok;
    out.s_next = section.coord(search.p_found);
    out.time = search.t_found;
    return out;
}

namespace {

// displacement with validity flag and the raw return status: a point whose
// orbit leaves the domain carries definite no-cycle information, while a
// time-out leaves the point genuinely unknown
struct Displacement {
    bool ok = false;
    ReturnStatus status = ReturnStatus::NoReturn;
    double d = 0.0;
};

Displacement displacement(const Flow2& flow, const Section& sec, double s,
                          const ReturnOptions& opt) {
    const ReturnResult r = return_map(flow, sec, s, opt);
    if (r.status != ReturnStatus::Ok) return {false, r.status, 0.0};
    return {true, ReturnStatus::Ok, r.s_next - s};
}

}  // namespace

void cycle_hyperbolicity(const Flow2& flow, LimitCycleRecord& rec, const ScanOptions& opt,
                         bool integrate_reversed) {
    const Section& sec = rec.section;
    const Vec2 p0 = sec.point(rec.s_star);
    const Flow2 eff = integrate_reversed ? reverse_flow(flow) : flow;
    const double time_sign = integrate_reversed ? -1.0 : 1.0;

    // augmented state: position plus running divergence integral
    Dopri5<3>::Options oopt;
    oopt.rel_tol = std::min(opt.ret.rel_tol, 1e-11);
    oopt.abs_tol = std::min(opt.ret.abs_tol, 1e-13);
    oopt.h_max = 1e6;
    Dopri5<3> solver(
        [&eff](double, const std::array<double, 3>& y) {
            const Vec2 v = eff.v(y[0], y[1]);
            return std::array<double, 3>{v[0], v[1], eff.div(y[0], y[1])};
        },
        oopt);

    const Vec2 v0 = eff.v(p0[0], p0[1]);
    const double dir0 = dot(v0, sec.normal()) > 0 ? 1.0 : -1.0;
    rec.samples.clear();
    rec.samples.push_back(p0);

    double t_cross = -1.0;
    std::array<double, 3> y_cross{};
    solver.integrate(0.0, {p0[0], p0[1], 0.0}, opt.ret.t_max, [&](const Dopri5<3>::DenseStep& ds) {
        constexpr int sub = 8;
        double t_prev = ds.t0;
        double e_prev = sec.offset({ds.eval(t_prev)[0], ds.eval(t_prev)[1]});
        for (int k = 1; k <= sub; ++k) {
            const double t = ds.t0 + (ds.t1 - ds.t0) * k / sub;
            const auto y = ds.eval(t);
            const double e = sec.offset({y[0], y[1]});
            if (e_prev != 0.0 && e * e_prev < 0.0) {
                const double tc = locate_event<3>(
                    ds,
                    [&sec](double, const std::array<double, 3>& q) {
                        return sec.offset({q[0], q[1]});
                    },
                    t_prev, t);
                const auto yc = ds.eval(tc);
                const Vec2 pc{yc[0], yc[1]};
                const Vec2 vel = eff.v(pc[0], pc[1]);
                if (dot(vel, sec.normal()) * dir0 > 0.0 &&
                    std::abs(sec.coord(pc)) <= sec.half_length) {
                    t_cross = tc;
                    y_cross = yc;
                    return false;
                }
            }
            e_prev = e;
            t_prev = t;
        }
        rec.samples.push_back({ds.y1[0], ds.y1[1]});
        return true;
    });
    if (t_cross < 0.0) throw QuadratureFailure("closed orbit did not return to its section");

    rec.period = t_cross;
    rec.r_gamma = time_sign * y_cross[2];  // forward-time convention
    rec.closure_error = std::hypot(y_cross[0] - p0[0], y_cross[1] - p0[1]);
    rec.samples.push_back({y_cross[0], y_cross[1]});

    // independent slope route: Richardson-extrapolated central differences
    // of the return map around the fixed point, taken in the attracting
    // time direction where returns exist and noise stays bounded
    const bool slope_reversed = rec.r_gamma > 0.0;
    const Flow2 slope_flow = slope_reversed ? reverse_flow(flow) : flow;
    ReturnOptions tight = opt.ret;
    tight.rel_tol = std::min(opt.ret.rel_tol, 1e-12);
    tight.abs_tol = std::min(opt.ret.abs_tol, 1e-14);
    double h = std::max(1e-5, 2e-2 * sec.half_length);
    h = std::min(h, 0.45 * (sec.half_length - std::abs(rec.s_star)) + 1e-12);
    auto slope_fd = [&](double hh) -> double {
        const ReturnResult rp = return_map(slope_flow, sec, rec.s_star + hh, tight);
        const ReturnResult rm = return_map(slope_flow, sec, rec.s_star - hh, tight);
        if (rp.status != ReturnStatus::Ok || rm.status != ReturnStatus::Ok)
            throw QuadratureFailure("return map not computable near the fixed point");
        return (rp.s_next - rm.s_next) / (2.0 * hh);
    };
    const double s1 = slope_fd(h);
    const double s2 = slope_fd(0.5 * h);
    double slope = (4.0 * s2 - s1) / 3.0;
    if (slope <= 0.0) slope = std::max(s2, 1e-300);  // FD noise floor on strongly contracting maps
    rec.multiplier = slope_reversed ? 1.0 / slope : slope;
    rec.slope_check_error = std::abs(rec.r_gamma - std::log(rec.multiplier));

    if (std::abs(rec.r_gamma) < opt.tol_cycle_hyperbolic)
        rec.verdict = CycleVerdict::NonHyperbolicSuspect;
    else
        rec.verdict = rec.r_gamma < 0.0 ? CycleVerdict::HyperbolicStable
                                        : CycleVerdict::HyperbolicUnstable;
}

namespace {

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab{b[0] - a[0], b[1] - a[1]};
    const Vec2 ap{p[0] - a[0], p[1] - a[1]};
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
    return std::hypot(ap[0] - t * ab[0], ap[1] - t * ab[1]);
}

double min_dist_to_polyline(const Vec2& p, const std::vector<Vec2>& poly) {
    double best = 1e300;
    for (std::size_t k = 0; k + 1 < poly.size(); ++k)
        best = std::min(best, dist_point_segment(p, poly[k], poly[k + 1]));
    if (poly.size() == 1) best = std::hypot(p[0] - poly[0][0], p[1] - poly[0][1]);
    return best;
}

bool same_cycle(const LimitCycleRecord& a, const LimitCycleRecord& b) {
    if (a.samples.empty() || b.samples.empty()) return false;
    // Hausdorff-style one-sided distance on the orbit polylines; adaptive
    // integration steps can be long, so measure against segments, not vertices
    double worst = 0.0;
    for (std::size_t k = 0; k < a.samples.size(); k += std::max<std::size_t>(1, a.samples.size() / 32))
        worst = std::max(worst, min_dist_to_polyline(a.samples[k], b.samples));
    return worst < 1e-4;
}

// one time direction of the scan: displacement grid, band bookkeeping and
// fixed-point isolation
void scan_direction(const Flow2& base_flow, bool reversed, const Section& section,
                    const std::vector<double>& ss, const ScanOptions& opt,
                    std::vector<Displacement>& d, CycleScan& out) {
    const Flow2 flow = reversed ? reverse_flow(base_flow) : base_flow;
    const int n = static_cast<int>(ss.size());
    d.assign(n, {});
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < n; ++k) d[k] = displacement(flow, section, ss[k], opt.ret);

    for (int k = 0; k + 1 < n; ++k) {
        if (!d[k].ok || !d[k + 1].ok) continue;
        if (d[k].d == 0.0 || d[k].d * d[k + 1].d >= 0.0) continue;
        // noise-floor crossings are closed-orbit bands, not transversal
        // fixed points; bisecting them would chase integrator noise
        if (std::max(std::abs(d[k].d), std::abs(d[k + 1].d)) < opt.non_isolated_eps) continue;
        double lo = ss[k], hi = ss[k + 1], flo = d[k].d;
        bool valid = true;
        for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            const Displacement dm = displacement(flow, section, mid, opt.ret);
            if (!dm.ok) {
                valid = false;
                break;
            }
            if (dm.d == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((dm.d > 0) == (flo > 0)) {
                lo = mid;
                flo = dm.d;
            } else {
                hi = mid;
            }
        }
        if (!valid) {
            ++out.scan_gaps;
            continue;
        }
        LimitCycleRecord rec;
        rec.section = section;
        rec.s_star = 0.5 * (lo + hi);
        rec.scan_sections = opt.sections;
        try {
            cycle_hyperbolicity(base_flow, rec, opt, reversed);
        } catch (const QuadratureFailure&) {
            ++out.scan_gaps;
            continue;
        }
        bool dup = false;
        for (const auto& have : out.cycles)
            if (same_cycle(rec, have)) dup = true;
        if (!dup) out.cycles.push_back(std::move(rec));
    }
}

}  // namespace

CycleScan scan_section_for_cycles(const Flow2& flow, const Section& section, double s_min,
                                  double s_max, const ScanOptions& opt) {
    CycleScan out;
    out.sections = opt.sections;
    const int n = std::max(opt.sections, 4);
    std::vector<double> ss(n);
    for (int k = 0; k < n; ++k) ss[k] = s_min + (s_max - s_min) * k / (n - 1);

    std::vector<Displacement> fwd, bwd;
    scan_direction(flow, false, section, ss, opt, fwd, out);
    scan_direction(flow, true, section, ss, opt, bwd, out);

    int returned = 0, small_count = 0, dead = 0;
    for (int k = 0; k < n; ++k) {
        const bool settled = fwd[k].ok || bwd[k].ok ||
                             fwd[k].status == ReturnStatus::LeftDomain ||
                             bwd[k].status == ReturnStatus::LeftDomain;
        if (!settled) {
            ++dead;  // timed out in both directions: truly unknown
            continue;
        }
        if (fwd[k].ok || bwd[k].ok) {
            ++returned;
            const double mag = std::min(fwd[k].ok ? std::abs(fwd[k].d) : 1e300,
                                        bwd[k].ok ? std::abs(bwd[k].d) : 1e300);
            if (mag < opt.non_isolated_eps) ++small_count;
        }
    }
    out.scan_gaps += dead;
    if (returned > 0 && small_count >= (9 * returned + 9) / 10) {
        out.non_isolated_band = true;
        out.cycles.clear();
    }
    return out;
}

CycleScan find_limit_cycles(const EssField& X, const Box& region, ScanOptions opt) {
    CycleScan out;
    out.sections = opt.sections;
    // run at unit coefficient pace so the time caps mean the same thing for
    // every field; divergence integrals and multipliers are scale-invariant
    // and only the periods need rescaling back
    double tscale = 1.0;
    const EssField Xn = time_normalized(X, &tscale);
    const Flow2 flow = make_flow(Xn);
    opt.ret.domain = region;

    const auto fins = find_finite_singularities(X, region);
    for (const auto& s : fins.points) {
        if (s.on_lambda) continue;
        if (s.jacobian.det() <= 0.0) continue;  // antisaddles only
        const double x = s.location[0], y = s.location[1];

        // the annulus cannot cross the invariant lines: clip the section at
        // the boundary of the complementary region containing the point
        double reach = std::min(region.x1 - x, 1e9);
        for (double wall : {0.0, 1.0})
            if (x < wall) reach = std::min(reach, wall - x);

        const double margin = 1e-3 * (1.0 + std::abs(x));
        const double s_max = reach - 1e-6 * (1.0 + reach);
        const double s_min = std::min(margin, 0.5 * s_max);
        if (s_max <= s_min) continue;

        // section centered on the scanned span, clear of the antisaddle
        Section sec;
        sec.base = {x + 0.5 * (s_min + s_max), y};
        sec.dir = {1.0, 0.0};
        sec.half_length = 0.5 * (s_max - s_min);

        CycleScan part =
            scan_section_for_cycles(flow, sec, -sec.half_length, sec.half_length, opt);
        out.scan_gaps += part.scan_gaps;
        out.non_isolated_band = out.non_isolated_band || part.non_isolated_band;
        for (auto& rec : part.cycles) {
            rec.period /= tscale;  // back to the field's own time
            bool dup = false;
            for (const auto& have : out.cycles)
                if (same_cycle(rec, have)) dup = true;
            if (!dup) out.cycles.push_back(std::move(rec));
        }
    }
    return out;
}

CofactorResult check_invariant_algebraic_curve(const EssField& X, const Poly2& F) {
    CofactorResult out;
    if (F.is_zero()) return out;
    const Poly2 W = X.P() * F.partial('x') + X.Q() * F.partial('y');

    // multivariate division by F in graded-lex order
    const auto lead = [](const Poly2& p) { return *p.terms().rbegin(); };
    const auto [lf, cf] = lead(F);
    Poly2 R = W, K, rem;
    int guard = 0;
    while (!R.is_zero() && ++guard < 100000) {
        const auto [lr, cr] = lead(R);
        if (lr.i >= lf.i && lr.j >= lf.j) {
            const Poly2 q = Poly2::monomial(lr.i - lf.i, lr.j - lf.j, cr / cf);
            K = K + q;
            R = R - q * F;
            R.set(lr.i, lr.j, 0.0);  // cancel the leading term exactly
        } else {
            rem.set(lr.i, lr.j, cr);
            R.set(lr.i, lr.j, 0.0);
        }
    }
    out.residual = rem.max_abs_coeff();
    out.invariant = out.residual <= 1e-10;
    if (out.invariant) out.cofactor = K;
    return out;
}

}  // namespace essstab

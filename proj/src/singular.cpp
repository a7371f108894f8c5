#include "essstab/singular.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace essstab {

namespace {

// binomial table, enough for the small degrees in play
double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// dense power-basis coefficients of p restricted to the box, with the box
// mapped to the unit square
std::vector<std::vector<double>> box_coeffs(const Poly2& p, const Box& b) {
    int dx = 0, dy = 0;
    for (const auto& [m, c] : p.terms()) {
        dx = std::max(dx, m.i);
        dy = std::max(dy, m.j);
    }
    std::vector<std::vector<double>> a(dx + 1, std::vector<double>(dy + 1, 0.0));
    const double hx = b.width(), hy = b.height();
    // x = x0 + hx s: x^i = sum_k C(i,k) x0^(i-k) hx^k s^k, same in y
    for (const auto& [m, c] : p.terms()) {
        for (int k = 0; k <= m.i; ++k) {
            const double cx = binom(m.i, k) * std::pow(b.x0, m.i - k) * std::pow(hx, k);
            for (int l = 0; l <= m.j; ++l) {
                const double cy = binom(m.j, l) * std::pow(b.y0, m.j - l) * std::pow(hy, l);
                a[k][l] += c * cx * cy;
            }
        }
    }
    return a;
}

// Bernstein coefficients on the unit square; all same strict sign => the
// polynomial has no zero in the box
bool bernstein_excludes(const Poly2& p, const Box& b) {
    const auto a = box_coeffs(p, b);
    const int m = static_cast<int>(a.size()) - 1;
    const int n = static_cast<int>(a[0].size()) - 1;
    bool pos = false, neg = false;
    for (int k = 0; k <= m; ++k) {
        for (int l = 0; l <= n; ++l) {
            double bc = 0.0;
            for (int i = 0; i <= k; ++i)
                for (int j = 0; j <= l; ++j)
                    bc += binom(k, i) * binom(l, j) / (binom(m, i) * binom(n, j)) * a[i][j];
            if (bc > 0.0) pos = true;
            if (bc < 0.0) neg = true;
            if (bc == 0.0 || (pos && neg)) return false;
        }
    }
    return pos != neg;
}

struct NewtonResult {
    bool ok = false;
    Vec2 p{};
    double residual = 0.0;
};

struct PolyPair {
    const Poly2& A;
    const Poly2& B;
    Poly2 Ax, Ay, Bx, By;

    PolyPair(const Poly2& a, const Poly2& b)
        : A(a), B(b), Ax(a.partial('x')), Ay(a.partial('y')), Bx(b.partial('x')),
          By(b.partial('y')) {}
};

NewtonResult newton_pair(const PolyPair& s, Vec2 start, double tol_abs) {
    Vec2 p = start;
    for (int it = 0; it < 60; ++it) {
        const double fv = s.A.eval(p[0], p[1]), gv = s.B.eval(p[0], p[1]);
        const double a = s.Ax.eval(p[0], p[1]), b = s.Ay.eval(p[0], p[1]);
        const double c = s.Bx.eval(p[0], p[1]), d = s.By.eval(p[0], p[1]);
        const double det = a * d - b * c;
        if (std::abs(det) < 1e-300) return {};
        Vec2 step{(d * fv - b * gv) / det, (a * gv - c * fv) / det};
        double damp = 1.0;
        const double r0 = std::hypot(fv, gv);
        for (int k = 0; k < 8; ++k) {
            const Vec2 q{p[0] - damp * step[0], p[1] - damp * step[1]};
            if (std::hypot(s.A.eval(q[0], q[1]), s.B.eval(q[0], q[1])) < r0 || r0 == 0.0) {
                p = q;
                break;
            }
            damp *= 0.5;
            if (k == 7) p = {p[0] - damp * step[0], p[1] - damp * step[1]};
        }
        const double res = std::hypot(s.A.eval(p[0], p[1]), s.B.eval(p[0], p[1]));
        if (res <= 0.01 * tol_abs) break;
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) return {};
    }
    NewtonResult out;
    out.p = p;
    out.residual = std::hypot(s.A.eval(p[0], p[1]), s.B.eval(p[0], p[1]));
    out.ok = out.residual <= tol_abs && std::isfinite(p[0]) && std::isfinite(p[1]);
    return out;
}

// common zeros of the pair over the box; subdivision + exclusion + Newton
void subdivide_pair(const PolyPair& s, const Box& box, double floor_size, double newton_size,
                    std::vector<Vec2>& found, std::vector<Box>& unresolved) {
    if (s.A.is_zero() || s.B.is_zero()) return;  // continua handled by the caller
    const double R = std::max({std::abs(box.x0), std::abs(box.x1), std::abs(box.y0),
                               std::abs(box.y1)});
    const double tol_abs = 1e-11 * (1.0 + s.A.scale_on(R) + s.B.scale_on(R));

    std::deque<Box> queue{box};
    while (!queue.empty()) {
        Box b = queue.front();
        queue.pop_front();
        if (bernstein_excludes(s.A, b) || bernstein_excludes(s.B, b)) continue;
        const double size = std::max(b.width(), b.height());
        if (size <= newton_size) {
            auto nr = newton_pair(s, {0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1)}, tol_abs);
            const double pad = 2.0 * size;
            if (nr.ok && nr.p[0] >= b.x0 - pad && nr.p[0] <= b.x1 + pad && nr.p[1] >= b.y0 - pad &&
                nr.p[1] <= b.y1 + pad) {
                bool dup = false;
                for (const auto& q : found)
                    if (std::hypot(q[0] - nr.p[0], q[1] - nr.p[1]) <
                        1e-8 * (1.0 + std::abs(nr.p[0]) + std::abs(nr.p[1])))
                        dup = true;
                if (!dup) found.push_back(nr.p);
                continue;
            }
            if (size <= floor_size) {
                unresolved.push_back(b);
                continue;
            }
        }
        const double mx = 0.5 * (b.x0 + b.x1), my = 0.5 * (b.y0 + b.y1);
        queue.push_back({b.x0, mx, b.y0, my});
        queue.push_back({mx, b.x1, b.y0, my});
        queue.push_back({b.x0, mx, my, b.y1});
        queue.push_back({mx, b.x1, my, b.y1});
    }
}

}  // namespace

Mat2 corner_jacobian(const EssField& X, int corner) {
    const double x = kCorners[corner][0], y = kCorners[corner][1];
    const double fv = X.f().eval(x, y), gv = X.g().eval(x, y);
    Mat2 J;
    J.a11 = (2.0 * x - 1.0) * fv;
    J.a22 = (2.0 * y - 1.0) * gv;
    return J;
}

namespace {

Singularity make_singularity(const EssField& X, Vec2 p, double residual, double tol_hyperbolic) {
    Singularity s;
    s.location = p;
    s.residual = residual;
    s.jacobian = X.jacobian(p[0], p[1]);
    s.eigenvalues = s.jacobian.eigenvalues();
    s.cls = classify_jacobian(s.jacobian, tol_hyperbolic);
    const double lt = 1e-9;
    s.on_lambda = std::abs(p[0]) < lt || std::abs(p[0] - 1.0) < lt || std::abs(p[1]) < lt ||
                  std::abs(p[1] - 1.0) < lt;
    s.is_corner = (std::abs(p[0]) < lt || std::abs(p[0] - 1.0) < lt) &&
                  (std::abs(p[1]) < lt || std::abs(p[1] - 1.0) < lt);
    try {
        s.index = poincare_index(s.cls);
        s.index_defined = true;
    } catch (const IndexUndetermined&) {
        s.index = 0;
        s.index_defined = false;
    }
    return s;
}

}  // namespace

Singularity classify_point(const EssField& X, Vec2 p, double tol_hyperbolic) {
    const double residual = norm(X.at(p[0], p[1]));
    // the tolerance scales with the local magnitude of the components, so
    // far-out candidates are judged as sharply as near-origin ones
    const double local = std::abs(p[0] * (p[0] - 1.0)) * X.f().abs_eval(p[0], p[1]) +
                         std::abs(p[1] * (p[1] - 1.0)) * X.g().abs_eval(p[0], p[1]);
    const double tol = 1e-9 * (1.0 + local);
    if (residual > tol)
        throw NotASingularity("field residual " + std::to_string(residual) + " at candidate");
    return make_singularity(X, p, residual, tol_hyperbolic);
}

FiniteSingularities find_finite_singularities(const EssField& X, const Box& box,
                                              double tol_hyperbolic) {
    FiniteSingularities out;
    std::vector<Vec2> candidates;
    auto push = [&candidates](Vec2 p) {
        for (const auto& q : candidates)
            if (std::hypot(q[0] - p[0], q[1] - p[1]) < 1e-8) return;
        candidates.push_back(p);
    };

    for (const auto& c : kCorners)
        if (box.contains(c[0], c[1])) push(c);

    // line singularities: univariate roots on each invariant line
    struct LineSpec {
        const char* name;
        bool vertical;
        double fixed;
    };
    const LineSpec lines[4] = {{"x=0", true, 0.0}, {"x=1", true, 1.0},
                               {"y=0", false, 0.0}, {"y=1", false, 1.0}};
    for (const auto& ln : lines) {
        const Poly1 r = ln.vertical ? X.g().restrict_x(ln.fixed) : X.f().restrict_y(ln.fixed);
        if (r.is_zero()) {
            // the factor vanishes on the whole line: a continuum of singularities
            out.degenerate_lines.push_back(ln.name);
            continue;
        }
        const double lo = ln.vertical ? box.y0 : box.x0;
        const double hi = ln.vertical ? box.y1 : box.x1;
        for (const auto& root : real_roots(r, lo, hi)) {
            if (ln.vertical)
                push({ln.fixed, root.x});
            else
                push({root.x, ln.fixed});
        }
    }

    if (!X.f().is_zero() && !X.g().is_zero()) {
        std::vector<Vec2> interior;
        PolyPair pair(X.f(), X.g());
        subdivide_pair(pair, box, 1e-6, 1e-2, interior, out.unresolved_boxes);
        for (const auto& p : interior) push(p);
    }

    for (const auto& p : candidates) {
        if (!box.contains(p[0], p[1])) continue;
        try {
            out.points.push_back(classify_point(X, p, tol_hyperbolic));
        } catch (const NotASingularity&) {
            // spurious candidate from a near-tangency; drop it
        }
    }
    std::sort(out.points.begin(), out.points.end(), [](const Singularity& a, const Singularity& b) {
        if (a.location[0] != b.location[0]) return a.location[0] < b.location[0];
        return a.location[1] < b.location[1];
    });
    return out;
}

FiniteSingularities find_far_singularities(const EssField& X, double v_max, double tol_hyperbolic) {
    FiniteSingularities out;
    std::vector<InfinitySingularity> equator;
    try {
        equator = infinity_singularities(X, tol_hyperbolic);
    } catch (const NonIsolatedInfinity&) {
        out.degenerate_lines.push_back("equator");
        return out;
    }

    std::vector<Vec2> plane_pts;
    for (Chart chart : {Chart::U1, Chart::U2}) {
        const ChartField cf = chart_field(X, chart);
        std::vector<Vec2> found;
        std::vector<Box> unresolved;
        PolyPair pair(cf.du, cf.dv);
        subdivide_pair(pair, Box{-1.08, 1.08, -v_max, v_max}, 1e-7, 1e-2, found, unresolved);

        for (const auto& uv : found) {
            if (std::abs(uv[1]) <= 1e-9) continue;  // equator point, reported separately
            const Vec2 p = chart_to_plane(chart, uv[0], uv[1]);
            bool dup = false;
            for (const auto& q : plane_pts)
                if (std::hypot(q[0] - p[0], q[1] - p[1]) <
                    1e-6 * (1.0 + std::abs(p[0]) + std::abs(p[1])))
                    dup = true;
            if (!dup) plane_pts.push_back(p);
        }
        for (const auto& ub : unresolved) {
            // cells hugging a degenerate equator point are that point's
            // blow-up neighborhood, not a missed finite singularity
            const double uc = 0.5 * (ub.x0 + ub.x1), vc = 0.5 * (ub.y0 + ub.y1);
            bool explained = false;
            for (const auto& e : equator) {
                if (e.cls.hyperbolic) continue;
                double du = std::abs(uc - (e.chart == chart ? e.u0 : (std::abs(e.u0) > 1e-6 ? 1.0 / e.u0 : 1e9)));
                if (du < 0.05 && std::abs(vc) < 0.05) explained = true;
            }
            if (!explained) out.unresolved_boxes.push_back(ub);
        }
    }

    for (const auto& p : plane_pts) {
        try {
            out.points.push_back(classify_point(X, p, tol_hyperbolic));
        } catch (const NotASingularity&) {
        }
    }
    std::sort(out.points.begin(), out.points.end(), [](const Singularity& a, const Singularity& b) {
        if (a.location[0] != b.location[0]) return a.location[0] < b.location[0];
        return a.location[1] < b.location[1];
    });
    return out;
}

FiniteSingularities find_all_finite_singularities(const EssField& X, const Box& box,
                                                  double tol_hyperbolic) {
    FiniteSingularities all = find_finite_singularities(X, box, tol_hyperbolic);
    const double v_max = 1.0 / (std::min({std::abs(box.x0), box.x1, std::abs(box.y0), box.y1}) - 1.0);
    FiniteSingularities far = find_far_singularities(X, v_max, tol_hyperbolic);
    for (const auto& s : far.points) {
        bool dup = false;
        for (const auto& q : all.points)
            if (std::hypot(q.location[0] - s.location[0], q.location[1] - s.location[1]) <
                1e-6 * (1.0 + std::abs(s.location[0]) + std::abs(s.location[1])))
                dup = true;
        if (!dup) all.points.push_back(s);
    }
    for (const auto& b : far.unresolved_boxes) all.unresolved_boxes.push_back(b);
    for (const auto& l : far.degenerate_lines)
        if (std::find(all.degenerate_lines.begin(), all.degenerate_lines.end(), l) ==
            all.degenerate_lines.end())
            all.degenerate_lines.push_back(l);
    std::sort(all.points.begin(), all.points.end(), [](const Singularity& a, const Singularity& b) {
        if (a.location[0] != b.location[0]) return a.location[0] < b.location[0];
        return a.location[1] < b.location[1];
    });
    return all;
}

int poincare_index(const Classification& cls) {
    switch (cls.kind) {
        case SingKind::HyperbolicSaddle:
            return -1;  // e = 0, h = 4 in (e - h)/2 + 1
        case SingKind::HyperbolicNode:
        case SingKind::HyperbolicFocus:
        case SingKind::HyperbolicFocusOrNode:
        case SingKind::DegenerateMonodromic:
            return +1;
        case SingKind::SemiHyperbolic:
        case SingKind::NonSimple:
            break;
    }
    throw IndexUndetermined("index undefined for " + to_string(cls.kind));
}

IndexSum index_sum_check(const EssField& X, const Box& box) {
    IndexSum r;
    const FiniteSingularities fins = find_all_finite_singularities(X, box);
    if (!fins.unresolved_boxes.empty() || !fins.degenerate_lines.empty())
        throw IndexUndetermined("finite singularities not fully resolved");
    double far = 1.0;
    for (const auto& s : fins.points) {
        if (!s.index_defined) throw IndexUndetermined("non-simple finite point in index sum");
        r.finite_sum += s.index;
        far = std::max({far, std::abs(s.location[0]), std::abs(s.location[1])});
    }
    // independent completeness guard: total winding along a circle that
    // encloses every found singularity must reproduce the finite sum
    const int w = winding_number([&X](double x, double y) { return X.at(x, y); }, {0.5, 0.5},
                                 2.0 * far + 3.0);
    if (w != r.finite_sum)
        throw IndexUndetermined("winding over enclosing circle disagrees: enumeration incomplete");
    for (const auto& s : infinity_singularities(X)) {
        if (!s.cls.hyperbolic && s.cls.kind != SingKind::DegenerateMonodromic)
            throw IndexUndetermined("non-simple infinity point in index sum");
        // each entry stands for an antipodal pair with equal indices
        r.infinity_sum += 2 * poincare_index(s.cls);
    }
    r.total = 2 * r.finite_sum + r.infinity_sum;
    r.passes = (r.total == 2);
    return r;
}

int winding_number(const std::function<Vec2(double, double)>& field, Vec2 center, double radius) {
    int m = 256;
    double prev_w = 1e300;
    for (int round = 0; round < 8; ++round, m *= 2) {
        double acc = 0.0;
        Vec2 v0 = field(center[0] + radius, center[1]);
        double last = std::atan2(v0[1], v0[0]);
        for (int k = 1; k <= m; ++k) {
            const double th = 2.0 * M_PI * k / m;
            const Vec2 v = field(center[0] + radius * std::cos(th), center[1] + radius * std::sin(th));
            const double ang = std::atan2(v[1], v[0]);
            double dth = ang - last;
            while (dth > M_PI) dth -= 2.0 * M_PI;
            while (dth < -M_PI) dth += 2.0 * M_PI;
            acc += dth;
            last = ang;
        }
        const double w = acc / (2.0 * M_PI);
        if (std::abs(w - std::round(w)) < 0.05 && std::abs(w - prev_w) < 0.05)
            return static_cast<int>(std::lround(w));
        prev_w = w;
    }
    return static_cast<int>(std::lround(prev_w));
}

}  // namespace essstab

#include "essstab/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "essstab/util.hpp"

namespace essstab {

double Poly2::eval(double x, double y) const {
    if (terms_.empty()) return 0.0;
    // bucket coefficients by y-exponent: row[j] is a dense x-polynomial
    int max_j = 0, max_i = 0;
    for (const auto& [m, c] : terms_) {
        max_j = std::max(max_j, m.j);
        max_i = std::max(max_i, m.i);
    }
    std::vector<std::vector<double>> rows(max_j + 1);
    for (const auto& [m, c] : terms_) {
        auto& row = rows[m.j];
        if (static_cast<int>(row.size()) <= m.i) row.resize(m.i + 1, 0.0);
        row[m.i] = c;
    }
    double v = 0.0;
    for (int j = max_j; j >= 0; --j) {
        double r = 0.0;
        const auto& row = rows[j];
        for (auto it = row.rbegin(); it != row.rend(); ++it) r = r * x + *it;
        v = v * y + r;
    }
    return v;
}

Poly2 Poly2::operator+(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m.i, m.j, c);
    return r;
}

Poly2 Poly2::operator-(const Poly2& o) const {
    Poly2 r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m.i, m.j, -c);
    return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
    Poly2 r;
    for (const auto& [ma, ca] : terms_)
        for (const auto& [mb, cb] : o.terms_) r.add_term(ma.i + mb.i, ma.j + mb.j, ca * cb);
    return r;
}

Poly2 Poly2::operator*(double s) const {
    Poly2 r;
    if (s == 0.0) return r;
    for (const auto& [m, c] : terms_) r.set(m.i, m.j, c * s);
    return r;
}

Poly2 Poly2::partial(char axis) const {
    Poly2 r;
    for (const auto& [m, c] : terms_) {
        if (axis == 'x') {
            if (m.i > 0) r.add_term(m.i - 1, m.j, c * m.i);
        } else {
            if (m.j > 0) r.add_term(m.i, m.j - 1, c * m.j);
        }
    }
    return r;
}

Poly2 Poly2::homogeneous_part(int k) const {
    Poly2 r;
    for (const auto& [m, c] : terms_)
        if (m.i + m.j == k) r.set(m.i, m.j, c);
    return r;
}

Poly1 Poly2::restrict_x(double x0) const {
    int max_j = -1;
    for (const auto& [m, c] : terms_) max_j = std::max(max_j, m.j);
    if (max_j < 0) return Poly1{};
    std::vector<CompensatedSum> acc(max_j + 1);
    for (const auto& [m, c] : terms_) {
        if (x0 == 0.0) {
            if (m.i == 0) acc[m.j].add(c);
        } else {
            acc[m.j].add(c * std::pow(x0, m.i));
        }
    }
    std::vector<double> out(max_j + 1);
    for (int j = 0; j <= max_j; ++j) out[j] = acc[j].value();
    return Poly1(std::move(out));
}

Poly1 Poly2::restrict_y(double y0) const {
    int max_i = -1;
    for (const auto& [m, c] : terms_) max_i = std::max(max_i, m.i);
    if (max_i < 0) return Poly1{};
    std::vector<CompensatedSum> acc(max_i + 1);
    for (const auto& [m, c] : terms_) {
        if (y0 == 0.0) {
            if (m.j == 0) acc[m.i].add(c);
        } else {
            acc[m.i].add(c * std::pow(y0, m.j));
        }
    }
    std::vector<double> out(max_i + 1);
    for (int i = 0; i <= max_i; ++i) out[i] = acc[i].value();
    return Poly1(std::move(out));
}

Poly1 Poly2::homogeneous_on_u(int k, bool x_is_one) const {
    if (k < 0) return Poly1{};
    std::vector<double> out(k + 1, 0.0);
    bool any = false;
    for (const auto& [m, c] : terms_) {
        if (m.i + m.j != k) continue;
        // x_is_one: term c x^i y^j -> c u^j; otherwise -> c u^i
        out[x_is_one ? m.j : m.i] += c;
        any = true;
    }
    if (!any) return Poly1{};
    return Poly1(std::move(out));
}

std::string Poly2::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        if (!first) os << (c >= 0 ? " + " : " - ");
        else if (c < 0) os << "-";
        os << std::abs(c);
        if (m.i > 0) os << "*x^" << m.i;
        if (m.j > 0) os << "*y^" << m.j;
        first = false;
    }
    return os.str();
}

namespace {

double bisect_root(const Poly1& p, double lo, double hi, double flo) {
    // assumes sign(p(lo)) != sign(p(hi))
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) return mid;
        const double fm = p.eval(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double newton_polish(const Poly1& p, const Poly1& dp, double x, double a, double b) {
    for (int k = 0; k < 3; ++k) {
        const double d = dp.eval(x);
        if (std::abs(d) < 1e-14) break;
        const double step = p.eval(x) / d;
        const double nx = x - step;
        if (nx < a || nx > b || !std::isfinite(nx)) break;
        x = nx;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace

std::vector<RealRoot> real_roots(const Poly1& p, double a, double b) {
    std::vector<RealRoot> roots;
    if (p.is_zero() || a >= b) return roots;
    const int deg = p.degree();
    if (deg == 0) return roots;

    const Poly1 dp = p.derivative();
    const double scale = std::max(p.scale_on(std::max(std::abs(a), std::abs(b))), 1e-300);

    if (deg == 1) {
        const double r = -p.coeff(0) / p.coeff(1);
        if (r >= a - 1e-12 && r <= b + 1e-12) roots.push_back({std::clamp(r, a, b), true});
        return roots;
    }

    // breakpoints: interval ends plus the critical points of p
    std::vector<double> pts{a, b};
    for (const auto& cr : real_roots(dp, a, b)) pts.push_back(cr.x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double u, double v) { return std::abs(u - v) < 1e-14; }),
              pts.end());

    const double zero_tol = 1e-12 * scale;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double x0 = pts[k], x1 = pts[k + 1];
        const double f0 = p.eval(x0), f1 = p.eval(x1);
        if ((f0 > zero_tol && f1 < -zero_tol) || (f0 < -zero_tol && f1 > zero_tol)) {
            double r = bisect_root(p, x0, x1, f0);
            r = newton_polish(p, dp, r, x0, x1);
            roots.push_back({r, true});
        }
    }
    // even-multiplicity roots: p touches zero at a critical point
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double x0 = pts[k];
        if (std::abs(p.eval(x0)) <= zero_tol) {
            bool boundary = (k == 0 && std::abs(x0 - a) < 1e-14) ||
                            (k + 1 == pts.size() && std::abs(x0 - b) < 1e-14);
            // boundary hits with a sign change inward were caught above
            bool dup = false;
            for (const auto& r : roots)
                if (std::abs(r.x - x0) < 1e-9 * std::max(1.0, std::abs(x0))) dup = true;
            if (!dup) roots.push_back({x0, boundary && std::abs(dp.eval(x0)) > zero_tol});
        }
    }

    std::sort(roots.begin(), roots.end(), [](const RealRoot& u, const RealRoot& v) { return u.x < v.x; });
    // merge clusters closer than the refinement resolution
    std::vector<RealRoot> out;
    for (const auto& r : roots) {
        if (!out.empty() && std::abs(r.x - out.back().x) < 1e-9 * std::max(1.0, std::abs(r.x))) {
            out.back().simple = false;
        } else {
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace essstab

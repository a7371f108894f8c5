#ifndef ESSSTAB_POLY_HPP
#define ESSSTAB_POLY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace essstab {

// Exponent pair of a bivariate monomial x^i y^j, ordered graded-lex
// (total degree first, then x-exponent). The ordering fixes coefficient
// vector layouts and makes every iteration deterministic.
struct Mono {
    int i = 0, j = 0;

    friend bool operator==(const Mono& a, const Mono& b) { return a.i == b.i && a.j == b.j; }
    friend bool operator<(const Mono& a, const Mono& b) {
        const int da = a.i + a.j, db = b.i + b.j;
        if (da != db) return da < db;
        return a.i < b.i;
    }
};

class Poly1;

// Sparse bivariate polynomial with double coefficients.
// Zero coefficients are never stored; the zero polynomial has no terms
// and degree -1. Values are immutable in spirit: every operation returns
// a new polynomial, so instances can be shared across threads freely.
class Poly2 {
  public:
    Poly2() = default;

    static Poly2 constant(double c) {
        Poly2 p;
        p.set(0, 0, c);
        return p;
    }
    static Poly2 monomial(int i, int j, double c) {
        Poly2 p;
        p.set(i, j, c);
        return p;
    }
    static Poly2 var_x() { return monomial(1, 0, 1.0); }
    static Poly2 var_y() { return monomial(0, 1, 1.0); }

    bool is_zero() const { return terms_.empty(); }
    int degree() const {
        int d = -1;
        for (const auto& [m, c] : terms_) d = std::max(d, m.i + m.j);
        return d;
    }

    double coeff(int i, int j) const {
        auto it = terms_.find(Mono{i, j});
        return it == terms_.end() ? 0.0 : it->second;
    }
    void set(int i, int j, double c) {
        if (c == 0.0)
            terms_.erase(Mono{i, j});
        else
            terms_[Mono{i, j}] = c;
    }
    void add_term(int i, int j, double c) { set(i, j, coeff(i, j) + c); }

    const std::map<Mono, double>& terms() const { return terms_; }

    // Horner evaluation: group terms by y-exponent, Horner in x per group,
    // then Horner in y over the group values.
    double eval(double x, double y) const;

    Poly2 operator+(const Poly2& o) const;
    Poly2 operator-(const Poly2& o) const;
    Poly2 operator*(const Poly2& o) const;
    Poly2 operator*(double s) const;
    Poly2 operator-() const { return *this * -1.0; }
    friend Poly2 operator*(double s, const Poly2& p) { return p * s; }

    // term-wise partial derivative; axis 'x' or 'y'
    Poly2 partial(char axis) const;

    // sum of terms of total degree k (k > degree gives zero)
    Poly2 homogeneous_part(int k) const;

    // restriction to an axis-parallel line, as a polynomial in the free
    // variable. Substituting 0 picks coefficients structurally (exact);
    // other values use compensated sums.
    Poly1 restrict_x(double x0) const;  // x = x0, polynomial in y
    Poly1 restrict_y(double y0) const;  // y = y0, polynomial in x

    // p_k(1,u) and p_k(u,1) for the homogeneous part of degree k;
    // used by the compactification charts.
    Poly1 homogeneous_on_u(int k, bool x_is_one) const;

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

    // magnitude bound on the square [-R, R]^2
    double scale_on(double R) const {
        double s = 0.0;
        const double r = std::max(1.0, R);
        for (const auto& [m, c] : terms_) {
            double p = 1.0;
            for (int k = 0; k < m.i + m.j; ++k) p *= r;
            s += std::abs(c) * p;
        }
        return s;
    }

    // sum of |c| |x|^i |y|^j: a sharp local magnitude scale
    double abs_eval(double x, double y) const {
        double s = 0.0;
        const double ax = std::abs(x), ay = std::abs(y);
        for (const auto& [m, c] : terms_) {
            double p = std::abs(c);
            for (int k = 0; k < m.i; ++k) p *= ax;
            for (int k = 0; k < m.j; ++k) p *= ay;
            s += p;
        }
        return s;
    }

    std::string to_string() const;

  private:
    std::map<Mono, double> terms_;
};

// Dense univariate polynomial, coefficients low to high degree.
// Trailing zeros are trimmed so the top stored coefficient is nonzero;
// the zero polynomial is the empty vector (degree -1).
class Poly1 {
  public:
    Poly1() = default;
    explicit Poly1(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    bool is_zero() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    double coeff(int k) const { return k >= 0 && k < static_cast<int>(c_.size()) ? c_[k] : 0.0; }
    const std::vector<double>& coeffs() const { return c_; }

    double eval(double x) const {
        double v = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * x + *it;
        return v;
    }

    Poly1 derivative() const {
        if (c_.size() <= 1) return Poly1{};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<double>(k);
        return Poly1(std::move(d));
    }

    Poly1 operator+(const Poly1& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
        for (std::size_t k = 0; k < o.c_.size(); ++k) r[k] += o.c_[k];
        return Poly1(std::move(r));
    }
    Poly1 operator-(const Poly1& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
        for (std::size_t k = 0; k < o.c_.size(); ++k) r[k] -= o.c_[k];
        return Poly1(std::move(r));
    }
    Poly1 operator*(const Poly1& o) const {
        if (is_zero() || o.is_zero()) return Poly1{};
        std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t a = 0; a < c_.size(); ++a)
            for (std::size_t b = 0; b < o.c_.size(); ++b) r[a + b] += c_[a] * o.c_[b];
        return Poly1(std::move(r));
    }
    Poly1 operator*(double s) const {
        std::vector<double> r = c_;
        for (double& ck : r) ck *= s;
        return Poly1(std::move(r));
    }

    // multiply by x^k
    Poly1 shifted(int k) const {
        if (is_zero()) return Poly1{};
        std::vector<double> r(c_.size() + k, 0.0);
        for (std::size_t a = 0; a < c_.size(); ++a) r[a + k] = c_[a];
        return Poly1(std::move(r));
    }

    // crude but safe magnitude bound on [-R, R]
    double scale_on(double R) const {
        double s = 0.0, p = 1.0;
        for (double ck : c_) {
            s += std::abs(ck) * p;
            p *= std::max(1.0, std::abs(R));
        }
        return s;
    }

    // relative trim threshold guards against noise-degree inflation
    void trim(double rel_tol = 0.0) {
        double m = 0.0;
        for (double ck : c_) m = std::max(m, std::abs(ck));
        while (!c_.empty() && std::abs(c_.back()) <= rel_tol * m) c_.pop_back();
        if (!c_.empty() && c_.back() == 0.0) {
            while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
        }
    }

  private:
    std::vector<double> c_;
};

struct RealRoot {
    double x = 0;
    bool simple = true;  // false: even multiplicity or unresolved cluster
};

// All real roots in [a, b], found by recursive critical-point subdivision:
// roots of p' split [a,b] into monotone pieces, sign changes are bisected
// to ~1e-12, and near-zero critical values are reported as non-simple.
std::vector<RealRoot> real_roots(const Poly1& p, double a, double b);

}  // namespace essstab

#endif

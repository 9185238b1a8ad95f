// The coefficient ring R: polynomials on the base R^d with rational
// coefficients, stored sparsely in graded-lex order.  d = 0 degenerates
// to plain rationals.  BaseDerivation is a vector field on the base,
// the shape anchors take values in.

#pragma once

#include "fedosov/multiindex.hpp"
#include "fedosov/rational.hpp"

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fedosov {

class PolyCoeff {
public:
    PolyCoeff() : dim_(0) {}
    explicit PolyCoeff(int dim) : dim_(dim) {}
    PolyCoeff(int dim, const Rational& c) : dim_(dim)
    {
        if (c != 0)
            terms_[MultiIndex(dim)] = c;
    }

    static PolyCoeff constant(int dim, const Rational& c) { return PolyCoeff(dim, c); }
    static PolyCoeff variable(int dim, int i, const Rational& c = 1)
    {
        PolyCoeff p(dim);
        if (c != 0)
            p.terms_[MultiIndex(dim).plus(i)] = c;
        return p;
    }
    static PolyCoeff monomial(int dim, const MultiIndex& m, const Rational& c)
    {
        PolyCoeff p(dim);
        if (c != 0)
            p.terms_[m] = c;
        return p;
    }

    int dim() const { return dim_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const
    {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_zero());
    }
    Rational constant_term() const
    {
        auto it = terms_.find(MultiIndex(dim_));
        return it == terms_.end() ? Rational(0) : it->second;
    }
    const std::map<MultiIndex, Rational, GrlexLess>& terms() const { return terms_; }

    void add_term(const MultiIndex& m, const Rational& c)
    {
        if (c == 0)
            return;
        auto [it, fresh] = terms_.try_emplace(m, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0)
                terms_.erase(it);
        }
    }

    PolyCoeff& operator+=(const PolyCoeff& o)
    {
        check_dim(o);
        for (auto& [m, c] : o.terms_)
            add_term(m, c);
        return *this;
    }
    PolyCoeff& operator-=(const PolyCoeff& o)
    {
        check_dim(o);
        for (auto& [m, c] : o.terms_)
            add_term(m, -c);
        return *this;
    }
    friend PolyCoeff operator+(PolyCoeff a, const PolyCoeff& b) { return a += b; }
    friend PolyCoeff operator-(PolyCoeff a, const PolyCoeff& b) { return a -= b; }
    friend PolyCoeff operator*(const PolyCoeff& a, const PolyCoeff& b)
    {
        a.check_dim(b);
        PolyCoeff p(a.dim_);
        for (auto& [ma, ca] : a.terms_)
            for (auto& [mb, cb] : b.terms_)
                p.add_term(ma + mb, ca * cb);
        return p;
    }
    PolyCoeff operator-() const
    {
        PolyCoeff p(dim_);
        for (auto& [m, c] : terms_)
            p.terms_[m] = -c;
        return p;
    }
    PolyCoeff& operator*=(const Rational& s)
    {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_)
            c *= s;
        return *this;
    }
    friend PolyCoeff operator*(PolyCoeff a, const Rational& s) { return a *= s; }
    friend PolyCoeff operator*(const Rational& s, PolyCoeff a) { return a *= s; }

    bool operator==(const PolyCoeff& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

    PolyCoeff derivative(int i) const
    {
        PolyCoeff p(dim_);
        for (auto& [m, c] : terms_)
            if (m[i] > 0)
                p.add_term(m.minus(i), c * m[i]);
        return p;
    }

    int degree() const
    {
        int d = 0;
        for (auto& [m, c] : terms_)
            d = std::max(d, m.order());
        return d;
    }

    std::string str() const
    {
        if (terms_.empty())
            return "0";
        std::ostringstream os;
        bool first = true;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [m, c] = *it;
            Rational a = c;
            if (!first)
                os << (a < 0 ? " - " : " + ");
            else if (a < 0)
                os << "-";
            first = false;
            if (a < 0)
                a = -a;
            bool unit = (a == 1) && !m.is_zero();
            if (!unit)
                os << rat_str(a);
            bool any = false;
            for (int i = 0; i < dim_; ++i)
                if (m[i] > 0) {
                    if (any || !unit)
                        os << "*";
                    os << "x" << (i + 1);
                    if (m[i] > 1)
                        os << "^" << m[i];
                    any = true;
                }
        }
        return os.str();
    }

private:
    void check_dim(const PolyCoeff& o) const
    {
        if (dim_ != o.dim_)
            throw std::invalid_argument("PolyCoeff base-dimension mismatch");
    }

    int dim_;
    std::map<MultiIndex, Rational, GrlexLess> terms_;
};

// Vector field on the base: d components of PolyCoeff.
struct BaseDerivation {
    std::vector<PolyCoeff> v;

    BaseDerivation() = default;
    explicit BaseDerivation(int dim) : v(dim, PolyCoeff(dim)) {}

    int dim() const { return static_cast<int>(v.size()); }
    bool is_zero() const
    {
        for (auto& c : v)
            if (!c.is_zero())
                return false;
        return true;
    }
    BaseDerivation& operator+=(const BaseDerivation& o)
    {
        for (int i = 0; i < dim(); ++i)
            v[i] += o.v[i];
        return *this;
    }
    BaseDerivation& operator-=(const BaseDerivation& o)
    {
        for (int i = 0; i < dim(); ++i)
            v[i] -= o.v[i];
        return *this;
    }
    friend BaseDerivation operator*(const PolyCoeff& f, BaseDerivation w)
    {
        for (auto& c : w.v)
            c = f * c;
        return w;
    }
    bool operator==(const BaseDerivation& o) const { return v == o.v; }
};

// Σ_i v_i ∂f/∂x_i
inline PolyCoeff apply_derivation(const BaseDerivation& w, const PolyCoeff& f)
{
    if (w.dim() != f.dim())
        throw std::invalid_argument("apply_derivation: dimension mismatch");
    PolyCoeff out(f.dim());
    for (int i = 0; i < w.dim(); ++i)
        out += w.v[i] * f.derivative(i);
    return out;
}

// commutator of base vector fields
inline BaseDerivation bracket(const BaseDerivation& a, const BaseDerivation& b)
{
    BaseDerivation out(a.dim());
    for (int i = 0; i < a.dim(); ++i)
        out.v[i] = apply_derivation(a, b.v[i]) - apply_derivation(b, a.v[i]);
    return out;
}

// --- polynomial literal parser -------------------------------------------
//
// Grammar: terms separated by '+'/'-'; a term is factors separated by '*';
// a factor is a rational "a" or "a/b" or a variable power "xk(^m)".
// Example: "3/2*x1^2*x2 - x3".

namespace detail {

inline void skip_ws(const std::string& s, size_t& i)
{
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
}

inline PolyCoeff parse_factor(const std::string& s, size_t& i, int dim)
{
    skip_ws(s, i);
    if (i >= s.size())
        throw std::invalid_argument("polynomial literal: unexpected end");
    if (s[i] == 'x') {
        size_t j = ++i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
            ++j;
        if (j == i)
            throw std::invalid_argument("polynomial literal: bad variable");
        int idx = std::stoi(s.substr(i, j - i));
        if (idx < 1 || idx > dim)
            throw std::invalid_argument("polynomial literal: variable x" + std::to_string(idx) +
                                        " out of range for base dimension " + std::to_string(dim));
        i = j;
        int pow = 1;
        skip_ws(s, i);
        if (i < s.size() && s[i] == '^') {
            ++i;
            skip_ws(s, i);
            size_t k = i;
            while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])))
                ++k;
            if (k == i)
                throw std::invalid_argument("polynomial literal: bad exponent");
            pow = std::stoi(s.substr(i, k - i));
            i = k;
        }
        MultiIndex m(dim);
        m.e[idx - 1] = pow;
        return PolyCoeff::monomial(dim, m, 1);
    }
    // rational number
    size_t j = i;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '/'))
        ++j;
    if (j == i)
        throw std::invalid_argument(std::string("polynomial literal: unexpected '") + s[i] + "'");
    PolyCoeff c = PolyCoeff::constant(dim, rat_parse(s.substr(i, j - i)));
    i = j;
    return c;
}

} // namespace detail

inline PolyCoeff poly_parse(const std::string& s, int dim)
{
    size_t i = 0;
    PolyCoeff out(dim);
    detail::skip_ws(s, i);
    if (i == s.size())
        throw std::invalid_argument("empty polynomial literal");
    bool first = true;
    while (i < s.size()) {
        int sign = 1;
        detail::skip_ws(s, i);
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
            sign = (s[i] == '-') ? -1 : 1;
            ++i;
        } else if (!first) {
            throw std::invalid_argument("polynomial literal: expected '+' or '-'");
        }
        detail::skip_ws(s, i);
        PolyCoeff term = detail::parse_factor(s, i, dim);
        detail::skip_ws(s, i);
        while (i < s.size() && s[i] == '*') {
            ++i;
            term = term * detail::parse_factor(s, i, dim);
            detail::skip_ws(s, i);
        }
        out += (sign < 0) ? -term : term;
        first = false;
    }
    return out;
}

} // namespace fedosov

// Multi-indices I = (I_1,...,I_r), their combinatorics (I!, |I|, binomials),
// the duality pairing <∂^I, χ^J> = I! δ_{I,J}, and (p,q)-shuffles.

#pragma once

#include "fedosov/rational.hpp"

#include <algorithm>
#include <compare>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fedosov {

struct MultiIndex {
    std::vector<int> e;

    MultiIndex() = default;
    explicit MultiIndex(int r) : e(r, 0) {}
    MultiIndex(std::initializer_list<int> l) : e(l) {}

    int size() const { return static_cast<int>(e.size()); }
    int operator[](int i) const { return e[i]; }
    int& operator[](int i) { return e[i]; }

    int order() const { return std::accumulate(e.begin(), e.end(), 0); }
    bool is_zero() const { return order() == 0; }

    Integer factorial() const
    {
        Integer f = 1;
        for (int k : e) {
            Integer fk;
            mpz_fac_ui(fk.get_mpz_t(), static_cast<unsigned long>(k));
            f *= fk;
        }
        return f;
    }

    MultiIndex plus(int k) const
    {
        MultiIndex m = *this;
        m.e[k] += 1;
        return m;
    }
    MultiIndex minus(int k) const
    {
        MultiIndex m = *this;
        if (m.e[k] == 0)
            throw std::logic_error("multi-index component underflow");
        m.e[k] -= 1;
        return m;
    }
    MultiIndex operator+(const MultiIndex& o) const
    {
        MultiIndex m = *this;
        for (int i = 0; i < size(); ++i)
            m.e[i] += o.e[i];
        return m;
    }
    // componentwise difference; false if any component would go negative
    bool try_sub(const MultiIndex& o, MultiIndex& out) const
    {
        out = *this;
        for (int i = 0; i < size(); ++i) {
            out.e[i] -= o.e[i];
            if (out.e[i] < 0)
                return false;
        }
        return true;
    }
    bool leq(const MultiIndex& o) const
    {
        for (int i = 0; i < size(); ++i)
            if (e[i] > o.e[i])
                return false;
        return true;
    }

    auto operator<=>(const MultiIndex&) const = default;
};

// graded-lexicographic order, used as the canonical term order everywhere
inline bool grlex_less(const MultiIndex& a, const MultiIndex& b)
{
    if (a.order() != b.order())
        return a.order() < b.order();
    return a.e < b.e;
}

struct GrlexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const { return grlex_less(a, b); }
};

// <∂^I, χ^J> = I! δ_{I,J}
inline Rational duality_pairing(const MultiIndex& I, const MultiIndex& J)
{
    if (I.size() != J.size())
        throw std::invalid_argument("duality_pairing: length mismatch");
    if (I != J)
        return 0;
    return Rational(I.factorial());
}

// binomial(I, K) = prod_i C(I_i, K_i), the deconcatenation multiplicity
inline Integer mi_binomial(const MultiIndex& I, const MultiIndex& K)
{
    Integer b = 1;
    for (int i = 0; i < I.size(); ++i) {
        Integer c;
        mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(I.e[i]),
                     static_cast<unsigned long>(K.e[i]));
        b *= c;
    }
    return b;
}

// all multi-indices of length r with |I| == n, in lexicographic order
inline void multiindices_of_order(int r, int n, std::vector<MultiIndex>& out)
{
    MultiIndex cur(r);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == r - 1) {
            cur.e[pos] = left;
            out.push_back(cur);
            return;
        }
        for (int k = left; k >= 0; --k) {
            cur.e[pos] = k;
            self(self, pos + 1, left - k);
        }
    };
    if (r == 0) {
        if (n == 0)
            out.push_back(MultiIndex(0));
        return;
    }
    rec(rec, 0, n);
}

inline std::vector<MultiIndex> multiindices_up_to(int r, int n)
{
    std::vector<MultiIndex> out;
    for (int m = 0; m <= n; ++m)
        multiindices_of_order(r, m, out);
    return out;
}

// A (p,q)-shuffle: permutation sigma of {0,...,p+q-1} with
// sigma increasing on the first p and on the last q slots.
// `perm[i]` is sigma(i); `sign` its signature.
struct Shuffle {
    std::vector<int> perm;
    int sign = 1;
};

inline std::vector<Shuffle> shuffles(int p, int q)
{
    if (p < 0 || q < 0)
        throw std::invalid_argument("shuffles: negative block size");
    int n = p + q;
    std::vector<Shuffle> out;
    std::vector<int> pick(p);
    // choose the image set sigma({0..p-1}); the rest is forced
    auto rec = [&](auto&& self, int idx, int from) -> void {
        if (idx == p) {
            Shuffle s;
            s.perm.assign(n, -1);
            std::vector<bool> used(n, false);
            for (int i = 0; i < p; ++i) {
                s.perm[i] = pick[i];
                used[pick[i]] = true;
            }
            int j = p;
            for (int v = 0; v < n; ++v)
                if (!used[v])
                    s.perm[j++] = v;
            int inv = 0;
            for (int x = 0; x < n; ++x)
                for (int y = x + 1; y < n; ++y)
                    if (s.perm[x] > s.perm[y])
                        ++inv;
            s.sign = (inv % 2 == 0) ? 1 : -1;
            out.push_back(std::move(s));
            return;
        }
        for (int v = from; v < n; ++v) {
            pick[idx] = v;
            self(self, idx + 1, v + 1);
        }
    };
    rec(rec, 0, 0);
    return out;
}

} // namespace fedosov

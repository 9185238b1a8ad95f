// The graded-algebra engine for Λ•L∨ ⊗ Ŝ B∨ and its value-decorated
// variants, in the adapted coframe of a splitting:
//
//   coframe indices 0..a-1   = A∨-part (p-transpose of the dual A-frame)
//   coframe indices a..a+r-1 = B∨-part (q-transpose χ^1..χ^r)
//
// Λ-words are bitmasks over these indices; the Ŝ-leg is a multi-index
// over r truncated at `trunc`.  In this coframe the operators σ, τ, h of
// the base contraction are bidegree-local index combinatorics, and every
// degree-+1 derivation is determined by its images on the generators
// (coefficients, coframe elements, χ's).

#pragma once

#include "fedosov/liepair.hpp"

#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace fedosov {

using Mask = std::uint32_t;

inline int mask_count(Mask m) { return std::popcount(m); }
inline Mask bits_below(int idx) { return (Mask(1) << idx) - 1; }

// sign of sorting the concatenation of two strictly sorted words;
// 0 if they overlap
inline int wedge_sign(Mask m1, Mask m2)
{
    if (m1 & m2)
        return 0;
    int inv = 0;
    Mask rest = m2;
    while (rest) {
        int b = std::countr_zero(rest);
        rest &= rest - 1;
        inv += mask_count(m1 >> (b + 1)); // bits of m1 above b
    }
    return (inv % 2 == 0) ? 1 : -1;
}

// sign of pulling index `idx` out of the front of the sorted word `m`
// (interior product position sign); requires idx ∈ m
inline int interior_sign(Mask m, int idx)
{
    int below = mask_count(m & bits_below(idx));
    return (below % 2 == 0) ? 1 : -1;
}

// --- value-leg kinds ---------------------------------------------------------

struct NoLegs {
    auto operator<=>(const NoLegs&) const = default;
};

struct WedgeLegs { // sorted antisymmetric legs over B as a bitmask
    Mask m = 0;
    auto operator<=>(const WedgeLegs&) const = default;
};

struct TensorLegs { // (B∨)^{⊗r'} ⊗ B^{⊗s'}, plain tensor slots
    std::vector<int> dual, prim;
    auto operator<=>(const TensorLegs&) const = default;
};

struct SlotLegs { // (S B)^{⊗(v+1)} slots as exponent multi-indices
    std::vector<MultiIndex> K;
    auto operator<=>(const SlotLegs&) const = default;
};

template <class Legs>
struct GKey {
    Mask lmask = 0;
    MultiIndex J;
    Legs legs;
    auto operator<=>(const GKey&) const = default;
};

template <class Legs>
class GForm {
public:
    int trunc = 0; // Ŝ-degree cutoff; higher keys are dropped on insertion

    GForm() = default;
    explicit GForm(int trunc_) : trunc(trunc_) {}

    using Key = GKey<Legs>;
    const std::map<Key, PolyCoeff>& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }

    void add(const Key& k, const PolyCoeff& c)
    {
        if (c.is_zero() || k.J.order() > trunc)
            return;
        auto [it, fresh] = terms_.try_emplace(k, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero())
                terms_.erase(it);
        }
    }

    GForm& operator+=(const GForm& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k, c);
        return *this;
    }
    GForm& operator-=(const GForm& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k, -c);
        return *this;
    }
    friend GForm operator+(GForm x, const GForm& y) { return x += y; }
    friend GForm operator-(GForm x, const GForm& y) { return x -= y; }
    GForm operator-() const
    {
        GForm g(trunc);
        for (auto& [k, c] : terms_)
            g.terms_[k] = -c;
        return g;
    }
    GForm& operator*=(const Rational& s)
    {
        if (s == 0)
            terms_.clear();
        else
            for (auto& [k, c] : terms_)
                c *= s;
        return *this;
    }
    friend GForm operator*(GForm x, const Rational& s) { return x *= s; }
    friend GForm operator*(const Rational& s, GForm x) { return x *= s; }
    GForm& scale(const PolyCoeff& f)
    {
        std::map<Key, PolyCoeff> out;
        for (auto& [k, c] : terms_) {
            PolyCoeff fc = f * c;
            if (!fc.is_zero())
                out[k] = fc;
        }
        terms_ = std::move(out);
        return *this;
    }

    bool operator==(const GForm& o) const { return terms_ == o.terms_; }

    // restriction to Ŝ-degree <= cut (for assertions inside the margin)
    GForm truncated(int cut) const
    {
        GForm g(trunc);
        for (auto& [k, c] : terms_)
            if (k.J.order() <= cut)
                g.terms_[k] = c;
        return g;
    }

    int min_s_degree() const
    {
        int m = trunc + 1;
        for (auto& [k, c] : terms_)
            m = std::min(m, k.J.order());
        return m;
    }

private:
    std::map<Key, PolyCoeff> terms_;
};

using MixedForm = GForm<NoLegs>;
using PolyVectorForm = GForm<WedgeLegs>; // value legs Λ^{k+1} B
using TensorForm = GForm<TensorLegs>;
using PolyDiffForm = GForm<SlotLegs>;

// 1-form valued vertical vector fields (X∇, Ξ∇) and their Λ^w-valued
// generalizations live in PolyVectorForm with exactly one leg.
using VertField = PolyVectorForm;

inline MixedForm mf_monomial(int trunc, int r, Mask lmask, const MultiIndex& J,
                             const PolyCoeff& c)
{
    MixedForm f(trunc);
    (void)r;
    f.add({lmask, J, NoLegs{}}, c);
    return f;
}

inline MixedForm mf_one(int trunc, int r, int d)
{
    return mf_monomial(trunc, r, 0, MultiIndex(r), PolyCoeff::constant(d, 1));
}

// graded product on Λ•L∨ ⊗ Ŝ B∨: wedge on Λ-legs, symmetric product on
// Ŝ-legs, Ŝ-degrees above the truncation dropped
inline MixedForm graded_mul(const MixedForm& x, const MixedForm& y)
{
    if (x.trunc != y.trunc)
        throw std::invalid_argument("graded_mul: truncation mismatch");
    MixedForm out(x.trunc);
    for (auto& [kx, cx] : x.terms())
        for (auto& [ky, cy] : y.terms()) {
            int s = wedge_sign(kx.lmask, ky.lmask);
            if (s == 0)
                continue;
            PolyCoeff c = cx * cy;
            if (s < 0)
                c = -c;
            out.add({kx.lmask | ky.lmask, kx.J + ky.J, NoLegs{}}, c);
        }
    return out;
}

// f placed on the left of a leg-carrying form; the legs are untouched
template <class Legs>
GForm<Legs> left_mul(const MixedForm& f, const GForm<Legs>& x)
{
    GForm<Legs> out(x.trunc);
    for (auto& [kf, cf] : f.terms())
        for (auto& [kx, cx] : x.terms()) {
            int s = wedge_sign(kf.lmask, kx.lmask);
            if (s == 0)
                continue;
            PolyCoeff c = cf * cx;
            if (s < 0)
                c = -c;
            out.add({kf.lmask | kx.lmask, kf.J + kx.J, kx.legs}, c);
        }
    return out;
}

// --- the base contraction operators δ, σ, τ, h ------------------------------
//
// All four act on the (lmask, J) part only and extend to decorated forms
// with identity on the value legs (the h̃/σ̃/τ̃ of the paper).

struct ContractionShape {
    int a = 0, r = 0;
    Mask bmask() const { return (((Mask(1) << r) - 1) << a); }
};

// δ(ω⊗χ^J) = Σ_m (q⊤χ_m ∧ ω) ⊗ J_m χ^{J−e_m}
template <class Legs>
GForm<Legs> delta_op(const ContractionShape& sh, const GForm<Legs>& x)
{
    GForm<Legs> out(x.trunc);
    for (auto& [k, c] : x.terms())
        for (int m = 0; m < sh.r; ++m) {
            if (k.J[m] == 0)
                continue;
            Mask beta = Mask(1) << (sh.a + m);
            if (k.lmask & beta)
                continue;
            int s = wedge_sign(beta, k.lmask); // β^m ∧ ω
            PolyCoeff v = c * Rational(k.J[m]);
            if (s < 0)
                v = -v;
            out.add({k.lmask | beta, k.J.minus(m), k.legs}, v);
        }
    return out;
}

// σ: projection onto bidegree (u,0), Ŝ-degree 0, read as Λ^u A∨
template <class Legs>
GForm<Legs> sigma_op(const ContractionShape& sh, const GForm<Legs>& x)
{
    GForm<Legs> out(x.trunc);
    for (auto& [k, c] : x.terms())
        if (k.J.is_zero() && (k.lmask & sh.bmask()) == 0)
            out.add(k, c);
    return out;
}

// τ(α) = p⊤(α) ⊗ 1: the inclusion of A∨-pure keys
template <class Legs>
GForm<Legs> tau_op(const ContractionShape& sh, const GForm<Legs>& x)
{
    for (auto& [k, c] : x.terms())
        if (!k.J.is_zero() || (k.lmask & sh.bmask()) != 0)
            throw std::invalid_argument("tau_op: input not an A-form");
    (void)sh;
    return x;
}

// h(ω⊗χ^J) = 1/(v+|J|) Σ_k (ι_{j(∂_k)} ω) ⊗ χ^{J+e_k}  for v >= 1, else 0
template <class Legs>
GForm<Legs> h_op(const ContractionShape& sh, const GForm<Legs>& x)
{
    GForm<Legs> out(x.trunc);
    for (auto& [k, c] : x.terms()) {
        int v = mask_count(k.lmask & sh.bmask());
        if (v == 0)
            continue;
        Rational w(1, v + k.J.order());
        for (int kk = 0; kk < sh.r; ++kk) {
            int idx = sh.a + kk;
            Mask bit = Mask(1) << idx;
            if (!(k.lmask & bit))
                continue;
            int s = interior_sign(k.lmask, idx);
            PolyCoeff v2 = c * (s < 0 ? -w : w);
            out.add({k.lmask & ~bit, k.J.plus(kk), k.legs}, v2);
        }
    }
    return out;
}

// --- degree-+1 derivations ---------------------------------------------------
//
// A derivation of the algebra Γ(ΛL∨ ⊗ ŜB∨) of odd degree, described by its
// images on the three kinds of generators.  δ, d_L^∇ for any connection,
// d_L^{∇⚡}, the action of X∇, and Q itself are all of this shape.

struct Derivation {
    int n = 0, r = 0, d = 0, trunc = 0;
    bool odd = true; // parity, for the Leibniz signs
    // image of a coefficient f ∈ R (for CE differentials Σ_t ρ_t(f) λ^t)
    std::function<MixedForm(const PolyCoeff&)> dcoef;
    std::vector<MixedForm> dtheta; // image of coframe generator, size n
    std::vector<MixedForm> dchi;   // image of χ_k, size r

    MixedForm zero() const { return MixedForm(trunc); }

    MixedForm apply(const MixedForm& x) const
    {
        MixedForm out(trunc);
        for (auto& [k, c] : x.terms()) {
            if (dcoef) {
                MixedForm img = dcoef(c);
                if (!img.is_zero())
                    out += graded_mul(img, mf_monomial(trunc, r, k.lmask, k.J,
                                                       PolyCoeff::constant(d, 1)));
            }
            Mask rest = k.lmask;
            while (rest) {
                int s = std::countr_zero(rest);
                rest &= rest - 1;
                const MixedForm& img = dtheta[s];
                if (img.is_zero())
                    continue;
                int below = mask_count(k.lmask & bits_below(s));
                Mask lo = k.lmask & bits_below(s);
                Mask hi = k.lmask & ~bits_below(s + 1);
                MixedForm piece = graded_mul(
                    mf_monomial(trunc, r, lo, MultiIndex(r), c), img);
                piece = graded_mul(piece, mf_monomial(trunc, r, hi, k.J,
                                                      PolyCoeff::constant(d, 1)));
                if (odd && below % 2)
                    out -= piece;
                else
                    out += piece;
            }
            int lam = mask_count(k.lmask);
            for (int kk = 0; kk < r; ++kk) {
                if (k.J[kk] == 0 || dchi[kk].is_zero())
                    continue;
                PolyCoeff cc = c * Rational(k.J[kk]);
                if (odd && lam % 2)
                    cc = -cc;
                out += graded_mul(mf_monomial(trunc, r, k.lmask, k.J.minus(kk), cc),
                                  dchi[kk]);
            }
        }
        return out;
    }
};

// −δ as a derivation would be the same images negated; δ itself:
inline Derivation delta_derivation(const ContractionShape& sh, int n, int d, int trunc)
{
    Derivation D;
    D.n = n;
    D.r = sh.r;
    D.d = d;
    D.trunc = trunc;
    D.dtheta.assign(n, MixedForm(trunc));
    D.dchi.assign(sh.r, MixedForm(trunc));
    for (int k = 0; k < sh.r; ++k)
        D.dchi[k] = mf_monomial(trunc, sh.r, Mask(1) << (sh.a + k), MultiIndex(sh.r),
                                PolyCoeff::constant(d, 1));
    return D;
}

// d_L^∇ for a connection on B (dual action on the χ's):
//   dcoef(f) = Σ_t ρ(u_t)(f) λ^t
//   dθ^γ     = −Σ_{α<β} c[α][β][γ] λ^α ∧ λ^β
//   dχ_k     = −Σ_t Σ_j Γ[t][j][k] λ^t ⊗ χ_j
inline Derivation ce_derivation(const PairModel& m, const LConnection& conn, int trunc)
{
    int n = m.n();
    Derivation D;
    D.n = n;
    D.r = m.r;
    D.d = m.d;
    D.trunc = trunc;
    D.dtheta.assign(n, MixedForm(trunc));
    D.dchi.assign(m.r, MixedForm(trunc));
    for (int ga = 0; ga < n; ++ga)
        for (int al = 0; al < n; ++al)
            for (int be = al + 1; be < n; ++be)
                if (!m.cc[al][be][ga].is_zero())
                    D.dtheta[ga].add(
                        {(Mask(1) << al) | (Mask(1) << be), MultiIndex(m.r), NoLegs{}},
                        -m.cc[al][be][ga]);
    for (int k = 0; k < m.r; ++k)
        for (int t = 0; t < n; ++t)
            for (int j = 0; j < m.r; ++j)
                if (!conn.Gamma[t][j][k].is_zero())
                    D.dchi[k].add({Mask(1) << t, MultiIndex(m.r).plus(j), NoLegs{}},
                                  -conn.Gamma[t][j][k]);
    bool any_anchor = false;
    for (auto& w : m.arho)
        any_anchor = any_anchor || !w.is_zero();
    if (any_anchor) {
        auto arho = m.arho;
        int r = m.r, d = m.d;
        D.dcoef = [n, r, d, trunc, arho](const PolyCoeff& f) {
            MixedForm out(trunc);
            for (int t = 0; t < n; ++t) {
                PolyCoeff g = apply_derivation(arho[t], f);
                if (!g.is_zero())
                    out.add({Mask(1) << t, MultiIndex(r), NoLegs{}}, g);
            }
            return out;
        };
    }
    return D;
}

// components of a one-leg vertical field: image under the induced derivation
// of each χ_k
inline std::vector<MixedForm> vvf_components(const VertField& W, int r, int trunc)
{
    std::vector<MixedForm> comp(r, MixedForm(trunc));
    for (auto& [k, c] : W.terms()) {
        if (mask_count(k.legs.m) != 1)
            throw std::invalid_argument("vvf_components: not a one-leg field");
        int leg = std::countr_zero(k.legs.m);
        comp[leg].add({k.lmask, k.J, NoLegs{}}, c);
    }
    return comp;
}

// Λ-form degree of a homogeneous vertical field (its parity as a derivation)
inline int vvf_form_degree(const VertField& W)
{
    int deg = -1;
    for (auto& [k, c] : W.terms()) {
        int d = mask_count(k.lmask);
        if (deg < 0)
            deg = d;
        else if (deg != d)
            throw std::invalid_argument("vvf_form_degree: inhomogeneous field");
    }
    return deg < 0 ? 0 : deg;
}

inline Derivation vvf_action(const VertField& W, const PairModel& m, int trunc)
{
    Derivation D;
    D.n = m.n();
    D.r = m.r;
    D.d = m.d;
    D.trunc = trunc;
    D.odd = (vvf_form_degree(W) % 2) == 1;
    D.dtheta.assign(m.n(), MixedForm(trunc));
    D.dchi = vvf_components(W, m.r, trunc);
    return D;
}

inline MixedForm act_vvf(const VertField& W, const PairModel& m, const MixedForm& f)
{
    return vvf_action(W, m, f.trunc).apply(f);
}

// graded commutator of two derivations, read back as a Λ-form valued
// vertical field: [D1, D2](χ_k) = D1(D2 χ_k) − (−1)^{|D1||D2|} D2(D1 χ_k)
inline VertField graded_commutator_field(const Derivation& D1, const Derivation& D2,
                                         const PairModel& m, int trunc)
{
    VertField out(trunc);
    bool both_odd = D1.odd && D2.odd;
    for (int k = 0; k < m.r; ++k) {
        MixedForm img = D1.apply(D2.dchi[k]);
        if (both_odd)
            img += D2.apply(D1.dchi[k]);
        else
            img -= D2.apply(D1.dchi[k]);
        for (auto& [key, c] : img.terms())
            out.add({key.lmask, key.J, WedgeLegs{Mask(1) << k}}, c);
    }
    return out;
}

inline VertField odd_commutator_field(const Derivation& D1, const Derivation& D2,
                                      const PairModel& m, int trunc)
{
    return graded_commutator_field(D1, D2, m, trunc);
}

// bracket of vertical fields as the graded commutator of their derivations
inline VertField vvf_bracket(const VertField& X, const VertField& Y, const PairModel& m,
                             int trunc)
{
    return graded_commutator_field(vvf_action(X, m, trunc), vvf_action(Y, m, trunc), m,
                                   trunc);
}

// --- basis enumeration (for identity assertions) -----------------------------

template <class Legs>
std::vector<GForm<Legs>> basis_forms(int n, int r, int d, int trunc, int max_lambda,
                                     int max_s, const std::vector<Legs>& legs)
{
    std::vector<GForm<Legs>> out;
    auto js = multiindices_up_to(r, max_s);
    for (Mask m = 0; m < (Mask(1) << n); ++m) {
        if (mask_count(m) > max_lambda)
            continue;
        for (auto& J : js)
            for (auto& lg : legs) {
                GForm<Legs> f(trunc);
                f.add({m, J, lg}, PolyCoeff::constant(d, 1));
                out.push_back(std::move(f));
            }
    }
    return out;
}

inline std::vector<MixedForm> mixed_basis(int n, int r, int d, int trunc, int max_lambda,
                                          int max_s)
{
    return basis_forms<NoLegs>(n, r, d, trunc, max_lambda, max_s, {NoLegs{}});
}

// --- filtered contractions and the perturbation lemma ------------------------

template <class Big, class Small>
struct Contraction {
    std::function<Big(const Big&)> dbig;
    std::function<Small(const Small&)> dsmall;
    std::function<Small(const Big&)> sigma;
    std::function<Big(const Small&)> tau;
    std::function<Big(const Big&)> h;
    int series_guard = 64;
};

// Verifies the five contraction identities plus the chain-map conditions
// on the supplied basis, comparing only Ŝ-components <= assert_cut.
// Returns a description of the first failure, if any.
template <class Big, class Small>
std::optional<std::string>
verify_contraction(const Contraction<Big, Small>& c, const std::vector<Big>& big_basis,
                   const std::vector<Small>& small_basis, int assert_cut)
{
    auto bad = [&](const char* what, size_t i) {
        std::ostringstream os;
        os << what << " fails on basis element #" << i;
        return std::optional<std::string>(os.str());
    };
    for (size_t i = 0; i < small_basis.size(); ++i) {
        const Small& s = small_basis[i];
        if (!(c.sigma(c.tau(s)) - s).truncated(assert_cut).is_zero())
            return bad("sigma.tau = id", i);
        if (!c.h(c.tau(s)).truncated(assert_cut).is_zero())
            return bad("h.tau = 0", i);
        if (!(c.sigma(c.dbig(c.tau(s))) - c.dsmall(c.sigma(c.tau(s))))
                 .truncated(assert_cut)
                 .is_zero())
            return bad("tau chain map", i);
    }
    for (size_t i = 0; i < big_basis.size(); ++i) {
        const Big& x = big_basis[i];
        Big lhs = c.tau(c.sigma(x)) - x;
        Big rhs = c.h(c.dbig(x)) + c.dbig(c.h(x));
        if (!(lhs - rhs).truncated(assert_cut).is_zero())
            return bad("tau.sigma - id = h.d + d.h", i);
        if (!c.sigma(c.h(x)).truncated(assert_cut).is_zero())
            return bad("sigma.h = 0", i);
        if (!c.h(c.h(x)).truncated(assert_cut).is_zero())
            return bad("h.h = 0", i);
        if (!(c.sigma(c.dbig(x)) - c.dsmall(c.sigma(x))).truncated(assert_cut).is_zero())
            return bad("sigma chain map", i);
        if (!c.dbig(c.dbig(x)).truncated(assert_cut).is_zero())
            return bad("d^2 = 0", i);
    }
    return std::nullopt;
}

struct FiltrationShift {
    int lambda = 0; // Λ-degree shift
    int s_min = 0;  // minimal Ŝ-degree shift
    int raise() const { return lambda + s_min; }
};

// Homological perturbation: given a filtered contraction and a perturbation
// ϱ strictly raising the filtration, returns the perturbed contraction
//   ( d+ϱ, σ̆ = Σ σ(ϱh)^k, τ̆ = Σ (hϱ)^k τ, h̆ = Σ (hϱ)^k h )
// with small differential d_small + θ, θ = Σ σ ϱ (hϱ)^k τ.
template <class Big, class Small>
struct Perturbed {
    Contraction<Big, Small> contraction;
    std::function<Small(const Small&)> theta;
};

template <class Big, class Small>
Perturbed<Big, Small> hpl_perturb(const Contraction<Big, Small>& c,
                                  std::function<Big(const Big&)> rho,
                                  FiltrationShift rho_shift)
{
    if (rho_shift.raise() < 1)
        throw std::invalid_argument("hpl_perturb: perturbation does not raise the filtration");
    int guard = c.series_guard;

    Perturbed<Big, Small> out;
    auto& p = out.contraction;
    p.series_guard = guard;
    p.dbig = [c, rho](const Big& x) { return c.dbig(x) + rho(x); };
    p.tau = [c, rho, guard](const Small& s) {
        Big t = c.tau(s);
        Big acc = t;
        for (int i = 0; i < guard && !t.is_zero(); ++i) {
            t = c.h(rho(t));
            acc += t;
        }
        return acc;
    };
    p.h = [c, rho, guard](const Big& x) {
        Big t = c.h(x);
        Big acc = t;
        for (int i = 0; i < guard && !t.is_zero(); ++i) {
            t = c.h(rho(t));
            acc += t;
        }
        return acc;
    };
    p.sigma = [c, rho, guard](const Big& x) {
        Big t = x;
        Small acc = c.sigma(x);
        for (int i = 0; i < guard && !t.is_zero(); ++i) {
            t = rho(c.h(t));
            acc += c.sigma(t);
        }
        return acc;
    };
    out.theta = [c, rho, guard](const Small& s) {
        Big t = c.tau(s);
        Small acc = c.sigma(rho(t));
        for (int i = 0; i < guard && !t.is_zero(); ++i) {
            t = c.h(rho(t));
            acc += c.sigma(rho(t));
        }
        return acc;
    };
    auto theta = out.theta;
    p.dsmall = [c, theta](const Small& s) { return c.dsmall(s) + theta(s); };
    return out;
}

// the unperturbed base contraction of Γ(ΛL∨⊗ŜB∨, −δ) onto (ΛA∨, 0),
// extended with identity on value legs
template <class Legs>
Contraction<GForm<Legs>, GForm<Legs>> base_contraction(const ContractionShape& sh)
{
    Contraction<GForm<Legs>, GForm<Legs>> c;
    c.dbig = [sh](const GForm<Legs>& x) { return -delta_op(sh, x); };
    c.dsmall = [](const GForm<Legs>& s) { return GForm<Legs>(s.trunc); };
    c.sigma = [sh](const GForm<Legs>& x) { return sigma_op(sh, x); };
    c.tau = [sh](const GForm<Legs>& s) { return tau_op(sh, s); };
    c.h = [sh](const GForm<Legs>& x) { return h_op(sh, x); };
    return c;
}

} // namespace fedosov

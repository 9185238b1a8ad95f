// The universal enveloping algebra U(L) in PBW normal form, its shuffle
// comultiplication, the quotient U(L)/U(L)Γ(A), the PBW isomorphism of
// the pair, and the induced objects ∇⚡, Θ, Ξ∇.
//
// Generators carry ids 0..r-1 for the B-frame g_k = j(∂_k) and r..r+a-1
// for the A-frame f_i, so ascending id order is the normal order
// (B-generators first) and U(L)Γ(A) is spanned by the normal monomials
// with a nonempty A-tail.

#pragma once

#include "fedosov/forms.hpp"

#include <utility>

namespace fedosov {

struct UKey {
    MultiIndex beta;  // B-generator exponents (length r)
    MultiIndex kappa; // A-generator exponents (length a)
    auto operator<=>(const UKey&) const = default;
    int filtration() const { return beta.order() + kappa.order(); }
};

class UEnvElem {
public:
    UEnvElem() = default;
    UEnvElem(int a, int r, int d) : a_(a), r_(r), d_(d) {}

    int a() const { return a_; }
    int r() const { return r_; }
    int d() const { return d_; }
    bool is_zero() const { return terms_.empty(); }
    const std::map<UKey, PolyCoeff>& terms() const { return terms_; }

    void add(const UKey& k, const PolyCoeff& c)
    {
        if (c.is_zero())
            return;
        auto [it, fresh] = terms_.try_emplace(k, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero())
                terms_.erase(it);
        }
    }

    UEnvElem& operator+=(const UEnvElem& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k, c);
        return *this;
    }
    UEnvElem& operator-=(const UEnvElem& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k, -c);
        return *this;
    }
    friend UEnvElem operator+(UEnvElem x, const UEnvElem& y) { return x += y; }
    friend UEnvElem operator-(UEnvElem x, const UEnvElem& y) { return x -= y; }
    UEnvElem& operator*=(const Rational& s)
    {
        if (s == 0)
            terms_.clear();
        else
            for (auto& [k, c] : terms_)
                c *= s;
        return *this;
    }
    friend UEnvElem operator*(UEnvElem x, const Rational& s) { return x *= s; }
    // left multiplication by a coefficient (R-module structure)
    UEnvElem& scale(const PolyCoeff& f)
    {
        std::map<UKey, PolyCoeff> out;
        for (auto& [k, c] : terms_) {
            PolyCoeff fc = f * c;
            if (!fc.is_zero())
                out[k] = fc;
        }
        terms_ = std::move(out);
        return *this;
    }
    bool operator==(const UEnvElem& o) const { return terms_ == o.terms_; }

    int filtration() const
    {
        int f = -1;
        for (auto& [k, c] : terms_)
            f = std::max(f, k.filtration());
        return f; // -1 for zero
    }

    static UEnvElem one(int a, int r, int d)
    {
        UEnvElem u(a, r, d);
        u.add({MultiIndex(r), MultiIndex(a)}, PolyCoeff::constant(d, 1));
        return u;
    }
    static UEnvElem generator(int a, int r, int d, int gen)
    {
        UEnvElem u(a, r, d);
        UKey k{MultiIndex(r), MultiIndex(a)};
        if (gen < r)
            k.beta.e[gen] = 1;
        else
            k.kappa.e[gen - r] = 1;
        u.add(k, PolyCoeff::constant(d, 1));
        return u;
    }

private:
    int a_ = 0, r_ = 0, d_ = 0;
    std::map<UKey, PolyCoeff> terms_;
};

// normal word of a key: ascending generator ids with multiplicities
inline std::vector<int> ukey_word(const UKey& k)
{
    std::vector<int> w;
    int r = k.beta.size();
    for (int i = 0; i < r; ++i)
        w.insert(w.end(), k.beta[i], i);
    for (int i = 0; i < k.kappa.size(); ++i)
        w.insert(w.end(), k.kappa[i], r + i);
    return w;
}

inline UKey word_ukey(const std::vector<int>& w, int a, int r)
{
    UKey k{MultiIndex(r), MultiIndex(a)};
    for (int g : w) {
        if (g < r)
            k.beta.e[g] += 1;
        else
            k.kappa.e[g - r] += 1;
    }
    return k;
}

// Straightening engine for products in U(L).
class UAlgebra {
public:
    UAlgebra(const PairModel& m) : m_(&m) {}

    int gen_count() const { return m_->n(); }
    // adapted frame index of a generator id
    int frame_of(int gen) const { return gen < m_->r ? m_->a + gen : gen - m_->r; }
    int gen_of_frame(int t) const { return t < m_->a ? m_->r + t : t - m_->a; }

    // word * f  ->  sum of (coefficient, subword); moving the coefficient
    // to the front consumes generators into anchor-derivative terms
    void move_front(const std::vector<int>& w, const PolyCoeff& f,
                    std::vector<std::pair<PolyCoeff, std::vector<int>>>& out) const
    {
        if (f.is_zero())
            return;
        if (w.empty()) {
            out.emplace_back(f, w);
            return;
        }
        if (f.is_constant()) { // constants commute with everything
            out.emplace_back(f, w);
            return;
        }
        std::vector<int> head(w.begin(), w.end() - 1);
        int u = w.back();
        std::vector<std::pair<PolyCoeff, std::vector<int>>> part;
        move_front(head, f, part);
        for (auto& [c, sub] : part) {
            auto full = sub;
            full.push_back(u);
            out.emplace_back(c, std::move(full));
        }
        PolyCoeff df = apply_derivation(m_->arho[frame_of(u)], f);
        move_front(head, df, out);
    }

    UEnvElem straighten(const PolyCoeff& coeff, const std::vector<int>& word) const
    {
        UEnvElem out(m_->a, m_->r, m_->d);
        std::vector<std::pair<PolyCoeff, std::vector<int>>> work{{coeff, word}};
        while (!work.empty()) {
            auto [c, w] = std::move(work.back());
            work.pop_back();
            if (c.is_zero())
                continue;
            size_t inv = w.size();
            for (size_t i = 0; i + 1 < w.size(); ++i)
                if (w[i] > w[i + 1]) {
                    inv = i;
                    break;
                }
            if (inv == w.size()) {
                out.add(word_ukey(w, m_->a, m_->r), c);
                continue;
            }
            // w[i] w[i+1] = w[i+1] w[i] + [u_{w[i]}, u_{w[i+1]}]
            auto swapped = w;
            std::swap(swapped[inv], swapped[inv + 1]);
            work.emplace_back(c, std::move(swapped));
            int ta = frame_of(w[inv]), tb = frame_of(w[inv + 1]);
            std::vector<int> prefix(w.begin(), w.begin() + inv);
            std::vector<int> suffix(w.begin() + inv + 2, w.end());
            for (int ga = 0; ga < m_->n(); ++ga) {
                const PolyCoeff& cb = m_->cc[ta][tb][ga];
                if (cb.is_zero())
                    continue;
                std::vector<std::pair<PolyCoeff, std::vector<int>>> moved;
                move_front(prefix, cb, moved);
                for (auto& [cm, pw] : moved) {
                    auto nw = pw;
                    nw.push_back(gen_of_frame(ga));
                    nw.insert(nw.end(), suffix.begin(), suffix.end());
                    work.emplace_back(c * cm, std::move(nw));
                }
            }
        }
        return out;
    }

    UEnvElem mul(const UEnvElem& x, const UEnvElem& y) const
    {
        UEnvElem out(m_->a, m_->r, m_->d);
        for (auto& [kx, cx] : x.terms()) {
            auto wx = ukey_word(kx);
            for (auto& [ky, cy] : y.terms()) {
                auto wy = ukey_word(ky);
                // word_x * (cy * word_y): move cy through word_x first
                std::vector<std::pair<PolyCoeff, std::vector<int>>> moved;
                move_front(wx, cy, moved);
                for (auto& [cm, sub] : moved) {
                    auto w = sub;
                    w.insert(w.end(), wy.begin(), wy.end());
                    out += straighten(cx * cm, w);
                }
            }
        }
        return out;
    }

    // left multiplication by the adapted frame element u_t
    UEnvElem frame_mul(int t, const UEnvElem& x) const
    {
        return mul(UEnvElem::generator(m_->a, m_->r, m_->d, gen_of_frame(t)), x);
    }

    const PairModel& model() const { return *m_; }

private:
    const PairModel* m_;
};

// drop every normal monomial with a nonempty A-tail
inline UEnvElem quotient_coset(const UEnvElem& x)
{
    UEnvElem out(x.a(), x.r(), x.d());
    for (auto& [k, c] : x.terms())
        if (k.kappa.is_zero())
            out.add(k, c);
    return out;
}

using CosetElem = UEnvElem; // with kappa = 0 in every key

// --- comultiplication ---------------------------------------------------------

// element of U ⊗_R U in canonical form: coefficients pulled to the global left
class UTensor {
public:
    UTensor() = default;
    UTensor(int a, int r, int d) : a_(a), r_(r), d_(d) {}
    const std::map<std::pair<UKey, UKey>, PolyCoeff>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    void add(const UKey& k1, const UKey& k2, const PolyCoeff& c)
    {
        if (c.is_zero())
            return;
        auto key = std::make_pair(k1, k2);
        auto [it, fresh] = terms_.try_emplace(key, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero())
                terms_.erase(it);
        }
    }
    UTensor& operator+=(const UTensor& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k.first, k.second, c);
        return *this;
    }
    UTensor& operator-=(const UTensor& o)
    {
        for (auto& [k, c] : o.terms_)
            add(k.first, k.second, -c);
        return *this;
    }
    bool operator==(const UTensor& o) const { return terms_ == o.terms_; }

private:
    int a_ = 0, r_ = 0, d_ = 0;
    std::map<std::pair<UKey, UKey>, PolyCoeff> terms_;
};

// shuffle comultiplication on normal monomials, extended left-R-linearly
inline UTensor u_comul(const UAlgebra& alg, const UEnvElem& x)
{
    const PairModel& m = alg.model();
    UTensor out(m.a, m.r, m.d);
    for (auto& [k, c] : x.terms()) {
        auto w = ukey_word(k);
        int n = static_cast<int>(w.size());
        for (Mask sub = 0; sub < (Mask(1) << n); ++sub) {
            std::vector<int> left, right;
            for (int i = 0; i < n; ++i)
                ((sub >> i) & 1 ? left : right).push_back(w[i]);
            out.add(word_ukey(left, m.a, m.r), word_ukey(right, m.a, m.r), c);
        }
    }
    return out;
}

// x ⊗_R y with left-R-linearity in both slots: coefficients of either slot
// factor out to the global coefficient with no word-crossing.  (The paper
// defers the precise ⊗_R structure; this convention is the one validated
// by the coalgebra-morphism and d_H identities.)
inline UTensor u_tensor(const UAlgebra& alg, const UEnvElem& x, const UEnvElem& y)
{
    const PairModel& m = alg.model();
    UTensor out(m.a, m.r, m.d);
    for (auto& [kx, cx] : x.terms())
        for (auto& [ky, cy] : y.terms())
            out.add(kx, ky, cx * cy);
    return out;
}

// project both slots to the coset
inline UTensor coset_tensor(const UTensor& t, int a, int r, int d)
{
    UTensor out(a, r, d);
    for (auto& [k, c] : t.terms())
        if (k.first.kappa.is_zero() && k.second.kappa.is_zero())
            out.add(k.first, k.second, c);
    return out;
}

// --- symmetric tensors Γ(S B) --------------------------------------------------

class SymTensor {
public:
    SymTensor() = default;
    SymTensor(int r, int d) : r_(r), d_(d) {}
    int r() const { return r_; }
    bool is_zero() const { return terms_.empty(); }
    const std::map<MultiIndex, PolyCoeff>& terms() const { return terms_; }
    void add(const MultiIndex& J, const PolyCoeff& c)
    {
        if (c.is_zero())
            return;
        auto [it, fresh] = terms_.try_emplace(J, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero())
                terms_.erase(it);
        }
    }
    SymTensor& operator+=(const SymTensor& o)
    {
        for (auto& [J, c] : o.terms_)
            add(J, c);
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o)
    {
        for (auto& [J, c] : o.terms_)
            add(J, -c);
        return *this;
    }
    friend SymTensor operator+(SymTensor x, const SymTensor& y) { return x += y; }
    friend SymTensor operator-(SymTensor x, const SymTensor& y) { return x -= y; }
    SymTensor& operator*=(const Rational& s)
    {
        if (s == 0)
            terms_.clear();
        else
            for (auto& [J, c] : terms_)
                c *= s;
        return *this;
    }
    friend SymTensor operator*(SymTensor x, const Rational& s) { return x *= s; }
    bool operator==(const SymTensor& o) const { return terms_ == o.terms_; }
    int top_degree() const
    {
        int t = -1;
        for (auto& [J, c] : terms_)
            t = std::max(t, J.order());
        return t;
    }
    static SymTensor monomial(int r, int d, const MultiIndex& J, const PolyCoeff& c)
    {
        SymTensor s(r, d);
        s.add(J, c);
        return s;
    }

private:
    int r_ = 0, d_ = 0;
    std::map<MultiIndex, PolyCoeff> terms_;
};

// covariant derivative ∇_{u_t} on S B (derivation extension + anchor on R)
inline SymTensor nabla_sym(const PairModel& m, const LConnection& conn, int t,
                           const SymTensor& s)
{
    SymTensor out(m.r, m.d);
    for (auto& [J, c] : s.terms()) {
        PolyCoeff dc = apply_derivation(m.arho[t], c);
        out.add(J, dc);
        for (int mm = 0; mm < m.r; ++mm) {
            if (J[mm] == 0)
                continue;
            for (int l = 0; l < m.r; ++l) {
                const PolyCoeff& g = conn.Gamma[t][mm][l];
                if (!g.is_zero())
                    out.add(J.minus(mm).plus(l), c * Rational(J[mm]) * g);
            }
        }
    }
    return out;
}

// --- PBW table ------------------------------------------------------------------

class PbwTable {
public:
    PbwTable() = default;

    // builds pbw(∂^J) for all |J| <= depth by the averaged recursion
    //   pbw(∂^J) = 1/|J| Σ_k J_k ( g_k · pbw(∂^{J-e_k}) − pbw(∇_{g_k} ∂^{J-e_k}) )
    PbwTable(const UAlgebra& alg, const LConnection& conn, int depth)
        : alg_(&alg), conn_(conn), depth_(depth)
    {
        const PairModel& m = alg.model();
        table_[MultiIndex(m.r)] = UEnvElem::one(m.a, m.r, m.d);
        for (int n = 1; n <= depth; ++n) {
            std::vector<MultiIndex> js;
            multiindices_of_order(m.r, n, js);
            for (auto& J : js)
                table_[J] = recursion_step(J);
        }
    }

    // restores a table from deserialized entries; the caller spot-checks
    static PbwTable from_cached(const UAlgebra& alg, const LConnection& conn, int depth,
                                std::map<MultiIndex, CosetElem> table)
    {
        PbwTable t;
        t.alg_ = &alg;
        t.conn_ = conn;
        t.depth_ = depth;
        t.table_ = std::move(table);
        return t;
    }

    // recomputes one monomial image from the stored lower-degree entries
    CosetElem recompute(const MultiIndex& J) const
    {
        if (J.is_zero())
            return UEnvElem::one(alg_->model().a, alg_->model().r, alg_->model().d);
        return recursion_step(J);
    }

    int depth() const { return depth_; }
    const UAlgebra& algebra() const { return *alg_; }
    const LConnection& connection() const { return conn_; }

    const CosetElem& monomial_image(const MultiIndex& J) const
    {
        auto it = table_.find(J);
        if (it == table_.end())
            throw std::out_of_range("PbwTable: depth exceeded");
        return it->second;
    }

    CosetElem apply(const SymTensor& s) const { return apply_linear(s); }

    // exact inverse by top-filtration peeling
    SymTensor invert(const CosetElem& u) const
    {
        const PairModel& m = alg_->model();
        if (u.filtration() > depth_)
            throw std::out_of_range("PbwTable::invert: filtration exceeds table depth");
        SymTensor acc(m.r, m.d);
        CosetElem rest = u;
        while (!rest.is_zero()) {
            int top = rest.filtration();
            SymTensor peel(m.r, m.d);
            for (auto& [k, c] : rest.terms())
                if (k.filtration() == top)
                    peel.add(k.beta, c);
            acc += peel;
            rest -= apply_linear(peel);
            if (rest.filtration() >= top && !rest.is_zero())
                throw std::logic_error("PbwTable::invert: triangularity violated");
        }
        return acc;
    }

private:
    CosetElem recursion_step(const MultiIndex& J) const
    {
        const PairModel& m = alg_->model();
        CosetElem acc(m.a, m.r, m.d);
        for (int k = 0; k < m.r; ++k) {
            if (J[k] == 0)
                continue;
            MultiIndex Jm = J.minus(k);
            CosetElem gk = quotient_coset(alg_->frame_mul(m.a + k, table_.at(Jm)));
            SymTensor low =
                nabla_sym(m, conn_, m.a + k,
                          SymTensor::monomial(m.r, m.d, Jm, PolyCoeff::constant(m.d, 1)));
            gk -= apply_linear(low);
            gk *= Rational(J[k]);
            acc += gk;
        }
        acc *= Rational(1, J.order());
        return acc;
    }

    CosetElem apply_linear(const SymTensor& s) const
    {
        const PairModel& m = alg_->model();
        CosetElem out(m.a, m.r, m.d);
        for (auto& [J, c] : s.terms()) {
            CosetElem t = monomial_image(J);
            t.scale(c);
            out += t;
        }
        return out;
    }

    const UAlgebra* alg_ = nullptr;
    LConnection conn_;
    int depth_ = 0;
    std::map<MultiIndex, CosetElem> table_;
};

// ∇⚡_{u_t}(s) = pbw^{-1}( u_t · pbw(s) ), the flat L-connection on S B
inline SymTensor nabla_lightning(const PbwTable& t, int frame_t, const SymTensor& s)
{
    const UAlgebra& alg = t.algebra();
    CosetElem u = quotient_coset(alg.frame_mul(frame_t, t.apply(s)));
    return t.invert(u);
}

// Θ(u_t; s) = ∇⚡_{u_t} s − ∇_{u_t} s − q(u_t) ⊙ s
inline SymTensor theta_map(const PbwTable& t, int frame_t, const SymTensor& s)
{
    const PairModel& m = t.algebra().model();
    SymTensor out = nabla_lightning(t, frame_t, s);
    out -= nabla_sym(m, t.connection(), frame_t, s);
    if (frame_t >= m.a) {
        int k = frame_t - m.a;
        for (auto& [J, c] : s.terms())
            out.add(J.plus(k), -c);
    }
    return out;
}

// Ξ∇ as a 1-form valued vertical field, truncated at Ŝ-degree N:
//   Ξ∇ = Σ_t Σ_k Σ_{|J|<=N} (1/J!) <Θ(u_t; ∂^J), χ_k>  λ^t ⊗ χ^J ⊗ ∂_k
inline VertField xi_from_pbw(const PbwTable& t, int N)
{
    const PairModel& m = t.algebra().model();
    if (t.depth() < N + 1)
        throw std::invalid_argument("xi_from_pbw: PBW table depth insufficient");
    VertField xi(N);
    for (int ft = 0; ft < m.n(); ++ft)
        for (int ord = 0; ord <= N; ++ord) {
            std::vector<MultiIndex> js;
            multiindices_of_order(m.r, ord, js);
            for (auto& J : js) {
                SymTensor th = theta_map(t, ft,
                                         SymTensor::monomial(m.r, m.d, J,
                                                             PolyCoeff::constant(m.d, 1)));
                Rational inv_fact(1);
                inv_fact /= Rational(J.factorial());
                for (int k = 0; k < m.r; ++k) {
                    auto it = th.terms().find(MultiIndex(m.r).plus(k));
                    if (it == th.terms().end())
                        continue;
                    xi.add({Mask(1) << ft, J, WedgeLegs{Mask(1) << k}},
                           it->second * inv_fact);
                }
            }
        }
    return xi;
}

} // namespace fedosov

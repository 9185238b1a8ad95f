// Lie-pair data model: structure functions, anchor, splitting, connections.
//
// Everything downstream works in the adapted frame u = (f_1..f_a, g_1..g_r)
// with f_i = e_i spanning A and g_k = j(∂_k) the splitting image, so that
// q(f_i) = 0 and q(g_k) = ∂_k.  PairModel precomputes the structure
// functions and anchors of that frame once.

#pragma once

#include "fedosov/polycoeff.hpp"

#include <cassert>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fedosov {

// Section of L expanded over a frame: n PolyCoeff components.
using Section = std::vector<PolyCoeff>;

struct LiePair {
    int a = 0; // rank of A (first a basis vectors span A)
    int r = 0; // rank of B = L/A
    int d = 0; // base dimension
    // c[i][j][k]: [e_i, e_j] = sum_k c[i][j][k] e_k
    std::vector<std::vector<std::vector<PolyCoeff>>> c;
    // rho[i]: anchor of e_i as a base vector field
    std::vector<BaseDerivation> rho;

    int n() const { return a + r; }

    static LiePair zero(int a_, int r_, int d_)
    {
        LiePair p;
        p.a = a_;
        p.r = r_;
        p.d = d_;
        int n = a_ + r_;
        p.c.assign(n, std::vector<std::vector<PolyCoeff>>(
                          n, std::vector<PolyCoeff>(n, PolyCoeff(d_))));
        p.rho.assign(n, BaseDerivation(d_));
        return p;
    }

    void set_bracket(int i, int j, int k, const PolyCoeff& v)
    {
        c[i][j][k] = v;
        c[j][i][k] = -v;
    }
};

// [X, Y] for sections given as coefficient vectors over the e-basis,
// with the anchor-Leibniz terms of the section-level bracket
// [X, fY] = f[X,Y] + (rho(X)f) Y.
inline Section lie_bracket(const LiePair& p, const Section& X, const Section& Y)
{
    int n = p.n();
    if (static_cast<int>(X.size()) != n || static_cast<int>(Y.size()) != n)
        throw std::invalid_argument("lie_bracket: section size mismatch");
    Section out(n, PolyCoeff(p.d));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            PolyCoeff xy = X[i] * Y[j];
            if (!xy.is_zero())
                for (int k = 0; k < n; ++k)
                    out[k] += xy * p.c[i][j][k];
        }
    for (int i = 0; i < n; ++i)
        if (!X[i].is_zero())
            for (int j = 0; j < n; ++j)
                out[j] += X[i] * apply_derivation(p.rho[i], Y[j]);
    for (int j = 0; j < n; ++j)
        if (!Y[j].is_zero())
            for (int i = 0; i < n; ++i)
                out[i] -= Y[j] * apply_derivation(p.rho[j], X[i]);
    return out;
}

inline BaseDerivation anchor_of(const LiePair& p, const Section& X)
{
    BaseDerivation w(p.d);
    for (int i = 0; i < p.n(); ++i)
        if (!X[i].is_zero())
            w += X[i] * p.rho[i];
    return w;
}

// --- validation ------------------------------------------------------------

struct ValidationIssue {
    std::string check;   // which invariant failed
    std::vector<int> witness; // offending index tuple
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

// Checks antisymmetry, A-closure, Jacobi (with anchor terms) and the
// anchor-morphism property.  Failures are data, not exceptions.
inline ValidationReport validate_liepair(const LiePair& p)
{
    ValidationReport rep;
    int n = p.n();

    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (!(p.c[i][j][k] + p.c[j][i][k]).is_zero())
                    rep.issues.push_back({"antisymmetry", {i + 1, j + 1, k + 1}, ""});

    for (int i = 0; i < p.a; ++i)
        for (int j = 0; j < p.a; ++j)
            for (int k = p.a; k < n; ++k)
                if (!p.c[i][j][k].is_zero())
                    rep.issues.push_back({"A-closure", {i + 1, j + 1, k + 1}, ""});

    auto basis = [&](int i) {
        Section s(n, PolyCoeff(p.d));
        s[i] = PolyCoeff::constant(p.d, 1);
        return s;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                Section jac = lie_bracket(p, lie_bracket(p, basis(i), basis(j)), basis(k));
                Section t2 = lie_bracket(p, lie_bracket(p, basis(j), basis(k)), basis(i));
                Section t3 = lie_bracket(p, lie_bracket(p, basis(k), basis(i)), basis(j));
                for (int m = 0; m < n; ++m)
                    jac[m] += t2[m] + t3[m];
                bool zero = true;
                for (auto& cm : jac)
                    zero = zero && cm.is_zero();
                if (!zero)
                    rep.issues.push_back({"jacobi", {i + 1, j + 1, k + 1}, ""});
            }

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            BaseDerivation lhs = anchor_of(p, lie_bracket(p, basis(i), basis(j)));
            BaseDerivation rhs = bracket(p.rho[i], p.rho[j]);
            lhs -= rhs;
            if (!lhs.is_zero())
                rep.issues.push_back({"anchor-morphism", {i + 1, j + 1}, ""});
        }
    return rep;
}

// --- splitting and connection ----------------------------------------------

// j(∂_k) = e_{a+k} + Σ_{m<=a} J[m][k] e_m ; p = id − j∘q.
struct Splitting {
    std::vector<std::vector<PolyCoeff>> J; // a x r

    static Splitting zero(const LiePair& p)
    {
        Splitting s;
        s.J.assign(p.a, std::vector<PolyCoeff>(p.r, PolyCoeff(p.d)));
        return s;
    }
};

// Adapted-frame connection coefficients: nabla_{u_t} ∂_j = Σ_k Gamma[t][j][k] ∂_k,
// t running over the adapted frame (f_1..f_a, g_1..g_r).
struct LConnection {
    std::vector<std::vector<std::vector<PolyCoeff>>> Gamma; // n x r x r
};

// Structure data of the pair re-expressed in the adapted frame; the single
// object every other module consumes.
struct PairModel {
    int a = 0, r = 0, d = 0;
    std::vector<std::vector<std::vector<PolyCoeff>>> cc; // adapted structure functions
    std::vector<BaseDerivation> arho;                    // adapted anchors
    LConnection conn;                                    // extends Bott in A-directions
    bool matched = false; // j(B) closes under the bracket

    int n() const { return a + r; }
    PolyCoeff pc(const Rational& q = 0) const { return PolyCoeff::constant(d, q); }

    // adapted frame element as a section over the original e-basis
    static Section frame_section(const LiePair& p, const Splitting& s, int t)
    {
        Section u(p.n(), PolyCoeff(p.d));
        if (t < p.a) {
            u[t] = PolyCoeff::constant(p.d, 1);
        } else {
            int k = t - p.a;
            u[p.a + k] = PolyCoeff::constant(p.d, 1);
            for (int m = 0; m < p.a; ++m)
                u[m] = s.J[m][k];
        }
        return u;
    }
};

// re-express a section (over e-basis) in the adapted frame:
// e_i = f_i (i<a), e_{a+k} = g_k − Σ_m J[m][k] f_m
inline Section to_adapted(const LiePair& p, const Splitting& s, const Section& X)
{
    Section out(p.n(), PolyCoeff(p.d));
    for (int i = 0; i < p.a; ++i)
        out[i] = X[i];
    for (int k = 0; k < p.r; ++k) {
        out[p.a + k] = X[p.a + k];
        for (int m = 0; m < p.a; ++m)
            out[m] -= X[p.a + k] * s.J[m][k];
    }
    return out;
}

// Bott coefficients in the adapted frame: ∇^Bott_{f_i} ∂_j = q([f_i, g_j]).
inline std::vector<std::vector<std::vector<PolyCoeff>>>
bott_coefficients(const LiePair& p, const Splitting& s)
{
    std::vector bott(p.a, std::vector(p.r, std::vector(p.r, PolyCoeff(p.d))));
    for (int i = 0; i < p.a; ++i)
        for (int j = 0; j < p.r; ++j) {
            Section br = lie_bracket(p, PairModel::frame_section(p, s, i),
                                     PairModel::frame_section(p, s, p.a + j));
            for (int k = 0; k < p.r; ++k)
                bott[i][j][k] = br[p.a + k]; // q-components
        }
    return bott;
}

// Builds the adapted model.  `gamma_b` gives the free B-direction
// coefficients ∇_{g_l} ∂_j = Σ Gamma_b[l][j][k] ∂_k; A-directions are Bott.
inline PairModel make_model(const LiePair& p, const Splitting& s,
                            const std::vector<std::vector<std::vector<PolyCoeff>>>& gamma_b)
{
    PairModel m;
    m.a = p.a;
    m.r = p.r;
    m.d = p.d;
    int n = p.n();
    m.cc.assign(n, std::vector(n, std::vector(n, PolyCoeff(p.d))));
    m.arho.assign(n, BaseDerivation(p.d));

    std::vector<Section> frame(n);
    for (int t = 0; t < n; ++t) {
        frame[t] = PairModel::frame_section(p, s, t);
        m.arho[t] = anchor_of(p, frame[t]);
    }
    for (int al = 0; al < n; ++al)
        for (int be = al + 1; be < n; ++be) {
            Section br = to_adapted(p, s, lie_bracket(p, frame[al], frame[be]));
            for (int ga = 0; ga < n; ++ga) {
                m.cc[al][be][ga] = br[ga];
                m.cc[be][al][ga] = -br[ga];
            }
        }

    // matched iff p([g_k, g_l]) = 0 for all k,l
    m.matched = true;
    for (int k = 0; k < p.r && m.matched; ++k)
        for (int l = 0; l < p.r && m.matched; ++l)
            for (int i = 0; i < p.a; ++i)
                if (!m.cc[p.a + k][p.a + l][i].is_zero()) {
                    m.matched = false;
                    break;
                }

    m.conn.Gamma.assign(n, std::vector(p.r, std::vector(p.r, PolyCoeff(p.d))));
    auto bott = bott_coefficients(p, s);
    for (int i = 0; i < p.a; ++i)
        m.conn.Gamma[i] = bott[i];
    if (!gamma_b.empty()) {
        if (static_cast<int>(gamma_b.size()) != p.r)
            throw std::invalid_argument("make_model: connection table must cover B-directions");
        for (int l = 0; l < p.r; ++l)
            m.conn.Gamma[p.a + l] = gamma_b[l];
    }
    return m;
}

// checks ∇_{f_i} ∂_j = q([f_i, g_j]) for a candidate full Gamma table
inline bool extends_bott(const PairModel& m, const LConnection& conn)
{
    for (int i = 0; i < m.a; ++i)
        for (int j = 0; j < m.r; ++j)
            for (int k = 0; k < m.r; ++k)
                if (!(conn.Gamma[i][j][k] - m.cc[i][m.a + j][m.a + k]).is_zero())
                    return false;
    return true;
}

// --- torsion and curvature --------------------------------------------------

// beta[j][l][k]: torsion β(∂_j, ∂_l) = Σ_k beta[j][l][k] ∂_k.
// β(∂_j, ∂_l) = ∇_{g_j} ∂_l − ∇_{g_l} ∂_j − q([g_j, g_l]).
inline std::vector<std::vector<std::vector<PolyCoeff>>>
torsion_tensor(const PairModel& m, const LConnection& conn)
{
    std::vector beta(m.r, std::vector(m.r, std::vector(m.r, PolyCoeff(m.d))));
    for (int j = 0; j < m.r; ++j)
        for (int l = 0; l < m.r; ++l)
            for (int k = 0; k < m.r; ++k)
                beta[j][l][k] = conn.Gamma[m.a + j][l][k] - conn.Gamma[m.a + l][j][k] -
                                m.cc[m.a + j][m.a + l][m.a + k];
    return beta;
}

inline bool torsion_free(const PairModel& m, const LConnection& conn)
{
    auto beta = torsion_tensor(m, conn);
    for (auto& bj : beta)
        for (auto& bl : bj)
            for (auto& bk : bl)
                if (!bk.is_zero())
                    return false;
    return true;
}

struct TorsionCorrection {
    std::vector<std::vector<std::vector<PolyCoeff>>> beta; // r x r x r
    LConnection corrected;                                 // ∇' = ∇ − T/2
};

// ∇' = ∇ − T^∇/2; leaves A-directions untouched (T(a,·)=0 for extensions
// of Bott) and kills the torsion.  Precondition: ∇ extends Bott.
inline TorsionCorrection torsion_and_correct(const PairModel& m, const LConnection& conn)
{
    if (!extends_bott(m, conn))
        throw std::invalid_argument("torsion_and_correct: connection does not extend Bott");
    TorsionCorrection out;
    out.beta = torsion_tensor(m, conn);
    out.corrected = conn;
    Rational half(1, 2);
    for (int j = 0; j < m.r; ++j)
        for (int l = 0; l < m.r; ++l)
            for (int k = 0; k < m.r; ++k)
                out.corrected.Gamma[m.a + j][l][k] -= half * out.beta[j][l][k];
    return out;
}

// R(u_al, u_be) ∂_j = ∇_al ∇_be ∂_j − ∇_be ∇_al ∂_j − ∇_{[u_al,u_be]} ∂_j
// returned as curv[al][be][j][k].
inline std::vector<std::vector<std::vector<std::vector<PolyCoeff>>>>
curvature(const PairModel& m, const LConnection& conn)
{
    int n = m.n();
    std::vector curv(n, std::vector(n, std::vector(m.r, std::vector(m.r, PolyCoeff(m.d)))));
    for (int al = 0; al < n; ++al)
        for (int be = 0; be < n; ++be)
            for (int j = 0; j < m.r; ++j)
                for (int k = 0; k < m.r; ++k) {
                    PolyCoeff v = apply_derivation(m.arho[al], conn.Gamma[be][j][k]) -
                                  apply_derivation(m.arho[be], conn.Gamma[al][j][k]);
                    for (int l = 0; l < m.r; ++l)
                        v += conn.Gamma[be][j][l] * conn.Gamma[al][l][k] -
                             conn.Gamma[al][j][l] * conn.Gamma[be][l][k];
                    for (int ga = 0; ga < n; ++ga)
                        v -= m.cc[al][be][ga] * conn.Gamma[ga][j][k];
                    curv[al][be][j][k] = v;
                }
    return curv;
}

} // namespace fedosov

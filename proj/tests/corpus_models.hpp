// Hand-built corpus pairs for the unit tests.  The JSON corpus under
// corpus/ mirrors these; test_cli checks the two agree.

#pragma once

#include "fedosov/liepair.hpp"

namespace fedosov::testcorpus {

// 3-dimensional abelian Lie algebra, A = <e1>, B = <e2,e3>
inline LiePair abelian()
{
    return LiePair::zero(1, 2, 0);
}

// Heisenberg h3: [x,y] = z with A = <z>; ordering e = (z, x, y)
inline LiePair heisenberg()
{
    LiePair p = LiePair::zero(1, 2, 0);
    p.set_bracket(1, 2, 0, PolyCoeff::constant(0, 1)); // [x,y] = z
    return p;
}

// aff(1): [t,s] = s with A = <t>; B = <s> is a (matched) line
inline LiePair aff1()
{
    LiePair p = LiePair::zero(1, 1, 0);
    p.set_bracket(0, 1, 1, PolyCoeff::constant(0, 1));
    return p;
}

// sl2 with Borel A = <h,e>, B = <f>; basis order (h, e, f)
inline LiePair sl2_borel()
{
    LiePair p = LiePair::zero(2, 1, 0);
    auto one = [](long c) { return PolyCoeff::constant(0, c); };
    p.set_bracket(0, 1, 1, one(2));  // [h,e] = 2e
    p.set_bracket(0, 2, 2, one(-2)); // [h,f] = -2f
    p.set_bracket(1, 2, 0, one(1));  // [e,f] = h
    return p;
}

// sl2 as the matched pair <f> ⋈ <h,e>; basis order (f, h, e)
inline LiePair sl2_matched()
{
    LiePair p = LiePair::zero(1, 2, 0);
    auto one = [](long c) { return PolyCoeff::constant(0, c); };
    p.set_bracket(1, 2, 2, one(2));  // [h,e] = 2e
    p.set_bracket(1, 0, 0, one(-2)); // [h,f] = -2f
    p.set_bracket(2, 0, 1, one(1));  // [e,f] = h
    return p;
}

// L = T R^1, A = 0 (classical Emmrich–Weinstein, flat case)
inline LiePair tangent_line()
{
    LiePair p = LiePair::zero(0, 1, 1);
    p.rho[0].v[0] = PolyCoeff::constant(1, 1); // rho(e1) = d/dx
    return p;
}

// L = T R^2 with the horizontal foliation A = <d/dx1>; polynomial splitting
inline LiePair foliation_plane()
{
    LiePair p = LiePair::zero(1, 1, 2);
    p.rho[0].v[0] = PolyCoeff::constant(2, 1); // rho(e1) = d/dx1
    p.rho[1].v[1] = PolyCoeff::constant(2, 1); // rho(e2) = d/dx2
    return p;
}

inline std::vector<std::vector<std::vector<PolyCoeff>>> zero_gamma_b(const LiePair& p)
{
    return std::vector(p.r, std::vector(p.r, std::vector(p.r, PolyCoeff(p.d))));
}

// sl2-borel model with the free choice ∇_f f̄ = 0
inline PairModel sl2_borel_model()
{
    LiePair p = sl2_borel();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

// sl2-matched with a torsion-free extension: ∇_h ē = 2ē, rest zero
inline PairModel sl2_matched_model()
{
    LiePair p = sl2_matched();
    auto gb = zero_gamma_b(p);
    // B-frame: g1 = h, g2 = e; torsion needs ∇_h ē − ∇_e h̄ = q([h,e]) = 2ē
    gb[0][1][1] = PolyCoeff::constant(0, 2);
    return make_model(p, Splitting::zero(p), gb);
}

// sl2-matched with a deliberately torsioned connection (β ≠ 0 control)
inline PairModel sl2_matched_torsioned_model()
{
    LiePair p = sl2_matched();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

inline PairModel heisenberg_model()
{
    LiePair p = heisenberg();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

inline PairModel abelian_model()
{
    LiePair p = abelian();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

inline PairModel aff1_model()
{
    LiePair p = aff1();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

inline PairModel tangent_line_model()
{
    LiePair p = tangent_line();
    return make_model(p, Splitting::zero(p), zero_gamma_b(p));
}

// nontrivial polynomial splitting j(∂) = e2 + x1·e1 and connection ∇_{g} ∂ = x2·∂
inline PairModel foliation_plane_model()
{
    LiePair p = foliation_plane();
    Splitting s = Splitting::zero(p);
    s.J[0][0] = PolyCoeff::variable(2, 0);
    auto gb = zero_gamma_b(p);
    gb[0][0][0] = PolyCoeff::variable(2, 1);
    return make_model(p, s, gb);
}

inline std::vector<PairModel> all_models()
{
    return {abelian_model(),     heisenberg_model(),  aff1_model(),
            sl2_borel_model(),   sl2_matched_model(), tangent_line_model(),
            foliation_plane_model()};
}

} // namespace fedosov::testcorpus

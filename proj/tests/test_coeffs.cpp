#include "fedosov/multiindex.hpp"
#include "fedosov/polycoeff.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

using namespace fedosov;

TEST_CASE("duality pairing <d^I, chi^J> = I! delta_IJ")
{
    CHECK(duality_pairing(MultiIndex{2, 1}, MultiIndex{2, 1}) == rat(2));
    CHECK(duality_pairing(MultiIndex{0, 0}, MultiIndex{0, 0}) == rat(1));
    CHECK(duality_pairing(MultiIndex{1, 0}, MultiIndex{0, 1}) == rat(0));
    CHECK_THROWS_AS(duality_pairing(MultiIndex{1}, MultiIndex{1, 0}),
                    std::invalid_argument);
}

// brute-force pairing via the permutation-sum definition of the duality
// <v1⊙..⊙vp, n1⊙..⊙np> = sum_sigma prod <v_k, n_sigma(k)>
static Rational pairing_oracle(const MultiIndex& I, const MultiIndex& J)
{
    int r = I.size();
    std::vector<int> vs, ns;
    for (int i = 0; i < r; ++i) {
        vs.insert(vs.end(), I[i], i);
        ns.insert(ns.end(), J[i], i);
    }
    if (vs.size() != ns.size())
        return 0;
    // all p! position permutations, duplicates included
    std::vector<int> idx(vs.size());
    for (size_t k = 0; k < idx.size(); ++k)
        idx[k] = static_cast<int>(k);
    Rational total = 0;
    do {
        bool all = true;
        for (size_t k = 0; k < vs.size(); ++k)
            all = all && (vs[k] == ns[idx[k]]);
        if (all)
            total += 1;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return total;
}

TEST_CASE("pairing equals the brute-force permutation sum up to |I| = 4")
{
    for (auto& I : multiindices_up_to(2, 4))
        for (auto& J : multiindices_up_to(2, 4))
            CHECK(duality_pairing(I, J) == pairing_oracle(I, J));
}

TEST_CASE("shuffles")
{
    auto s11 = shuffles(1, 1);
    REQUIRE(s11.size() == 2);
    CHECK(s11[0].sign * s11[1].sign == -1);

    auto s20 = shuffles(2, 0);
    REQUIRE(s20.size() == 1);
    CHECK(s20[0].sign == 1);

    CHECK(shuffles(2, 2).size() == 6);
}

// exhaustive filter oracle: (p,q)-shuffles are exactly the permutations
// increasing on both blocks, the count is binomial(p+q, p), the signature
// matches the parity, and composing with block permutations is a disjoint
// exhaustive decomposition of S_{p+q}
TEST_CASE("shuffle decomposition of the symmetric group, p+q <= 5")
{
    for (int p = 0; p <= 5; ++p)
        for (int q = 0; p + q <= 5; ++q) {
            int n = p + q;
            auto sh = shuffles(p, q);
            std::vector<int> idx(n);
            for (int i = 0; i < n; ++i)
                idx[i] = i;
            size_t increasing = 0;
            do {
                bool ok = true;
                for (int i = 0; i + 1 < p; ++i)
                    ok = ok && idx[i] < idx[i + 1];
                for (int i = p; i + 1 < n; ++i)
                    ok = ok && idx[i] < idx[i + 1];
                if (ok)
                    ++increasing;
            } while (std::next_permutation(idx.begin(), idx.end()));
            CHECK(sh.size() == increasing);
            Integer binom;
            mpz_bin_uiui(binom.get_mpz_t(), n, p);
            CHECK(Integer(static_cast<long>(sh.size())) == binom);
            for (auto& s : sh) {
                int inv = 0;
                for (int x = 0; x < n; ++x)
                    for (int y = x + 1; y < n; ++y)
                        if (s.perm[x] > s.perm[y])
                            ++inv;
                CHECK(s.sign == (inv % 2 ? -1 : 1));
            }
            // each sigma factors uniquely as shuffle ∘ (block permutation)
            size_t fact_p = 1, fact_q = 1;
            for (int i = 2; i <= p; ++i)
                fact_p *= i;
            for (int i = 2; i <= q; ++i)
                fact_q *= i;
            size_t total = 1;
            for (int i = 2; i <= n; ++i)
                total *= i;
            CHECK(sh.size() * fact_p * fact_q == total);
        }
}

TEST_CASE("polynomial parsing and arithmetic")
{
    PolyCoeff p = poly_parse("3/2*x1^2*x2 - x3", 3);
    MultiIndex m{2, 1, 0};
    CHECK(p.terms().at(m) == rat(3, 2));
    CHECK(p.terms().at(MultiIndex{0, 0, 1}) == rat(-1));
    CHECK(poly_parse("x1 - x1", 2).is_zero());
    CHECK_THROWS_AS(poly_parse("1.5e3", 1), std::invalid_argument);
    CHECK_THROWS_AS(poly_parse("x4", 3), std::invalid_argument);
    CHECK(p.str() == "3/2*x1^2*x2 - x3");
    CHECK(poly_parse(p.str(), 3) == p);
}

TEST_CASE("apply_derivation examples")
{
    // v = x d/dx on f = x^2 gives 2x^2 (Euler operator)
    BaseDerivation v(1);
    v.v[0] = PolyCoeff::variable(1, 0);
    PolyCoeff f = poly_parse("x1^2", 1);
    CHECK(apply_derivation(v, f) == poly_parse("2*x1^2", 1));

    BaseDerivation ddx(1);
    ddx.v[0] = PolyCoeff::constant(1, 1);
    CHECK(apply_derivation(ddx, PolyCoeff::constant(1, rat(7, 3))).is_zero());

    // v = x d/dy on y^2 gives 2xy, term-by-term differentiation oracle
    BaseDerivation w(2);
    w.v[1] = PolyCoeff::variable(2, 0);
    CHECK(apply_derivation(w, poly_parse("x2^2", 2)) == poly_parse("2*x1*x2", 2));
}

TEST_CASE("Leibniz rule for apply_derivation on random polynomials")
{
    std::mt19937 rng(20240811);
    auto rand_poly = [&](int d, int deg) {
        PolyCoeff p(d);
        auto ms = multiindices_up_to(d, deg);
        std::uniform_int_distribution<int> coef(-4, 4);
        for (auto& m : ms)
            p.add_term(m, rat(coef(rng)));
        return p;
    };
    for (int trial = 0; trial < 20; ++trial) {
        BaseDerivation v(2);
        v.v[0] = rand_poly(2, 2);
        v.v[1] = rand_poly(2, 2);
        PolyCoeff f = rand_poly(2, 4), g = rand_poly(2, 4);
        CHECK(apply_derivation(v, f * g) ==
              apply_derivation(v, f) * g + f * apply_derivation(v, g));
    }
}

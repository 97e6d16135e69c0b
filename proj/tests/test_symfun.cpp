#include <catch2/catch_amalgamated.hpp>

#include "ckp/partitions.hpp"
#include "ckp/symfun.hpp"

using namespace ckp;

namespace {

SuperPoly T(int n) { return SuperPoly::gen(GEN_T + n); }
SuperPoly X(int i) { return SuperPoly::gen(GEN_X + i); }

}  // namespace

TEST_CASE("complete homogeneous functions, small closed forms") {
    auto t = EvenTimes::formal(9);
    CHECK(complete_h(0, t) == SuperPoly::one());
    CHECK(complete_h(1, t) == T(1));
    CHECK(complete_h(2, t) == T(1) * T(1) * Rat(1, 2));
    CHECK(complete_h(3, t) == T(1) * T(1) * T(1) * Rat(1, 6) + T(3));
    CHECK(complete_h(4, t) ==
          pow(T(1), 4) * Rat(1, 24) + T(1) * T(3));
    CHECK(complete_h(5, t) ==
          pow(T(1), 5) * Rat(1, 120) + pow(T(1), 2) * T(3) * Rat(1, 2) + T(5));
}

TEST_CASE("complete homogeneous functions match the multiset expansion") {
    // independent route: coefficient of z^m in prod_k exp(t_k z^k) is
    // sum over odd partitions mu of m of prod_b t_b^{mult_b} / mult_b!
    auto t = EvenTimes::formal(11);
    for (int m = 0; m <= 9; ++m) {
        SuperPoly expect;
        for (auto& mu : odd_partitions_of(m)) {
            SuperPoly term = SuperPoly::one();
            for (auto& [b, mult] : mu.multiplicities())
                term *= pow(T(b), mult) * Rat(Int(1), factorial(mult));
            expect += term;
        }
        CHECK(complete_h(m, t) == expect);
    }
}

TEST_CASE("elementary functions coincide with complete ones on odd times") {
    auto t = EvenTimes::formal(11);
    for (int n = 0; n <= 9; ++n) CHECK(elementary_e(n, t) == complete_h(n, t));
    // ...and with a concrete non-formal time collection
    EvenTimes s;
    s.set(1, SuperPoly::scalar(Rat(2, 3)));
    s.set(3, X(1) * Rat(5));
    for (int n = 0; n <= 6; ++n) CHECK(elementary_e(n, s) == complete_h(n, s));
}

TEST_CASE("hook Schur functions") {
    auto t = EvenTimes::formal(11);
    CHECK(hook_schur(0, 0, t) == T(1));
    CHECK(hook_schur(1, 0, t) == T(1) * T(1) * Rat(1, 2));
    CHECK(hook_schur(0, 1, t) == T(1) * T(1) * Rat(1, 2));
    // s_(1|1) = h2 e1 - h3 e0 = t1^3/2 - t1^3/6 - t3
    CHECK(hook_schur(1, 1, t) == pow(T(1), 3) * Rat(1, 3) - T(3));
    // weight homogeneity: every term of s_(n|m) has weight n + m + 1
    for (int n = 0; n <= 3; ++n)
        for (int m = 0; m <= 3; ++m) {
            auto s = hook_schur(n, m, t);
            long w2 = 2 * (n + m + 1);
            CHECK(s.weight2_slice(w2) == s);
            CHECK(!s.is_zero());
        }
}

TEST_CASE("even Miwa substitution") {
    // single point: t1 = 2x, t3 = (2/3)x^3
    auto t1 = miwa_even({X(1)}, 5);
    CHECK(t1.at(1) == X(1) * Rat(2));
    CHECK(t1.at(3) == pow(X(1), 3) * Rat(2, 3));
    CHECK(t1.at(5) == pow(X(1), 5) * Rat(2, 5));
    CHECK(t1.at(2).is_zero());
    CHECK(t1.at(7).is_zero());

    // empty list: all times vanish
    auto t0 = miwa_even({}, 5);
    CHECK(t0.at(1).is_zero());
    CHECK(t0.at(3).is_zero());

    // two equal points double the single-point times
    auto t2 = miwa_even({X(1), X(1)}, 5);
    CHECK(t2.at(3) == t1.at(3) * Rat(2));

    // two distinct points: power sums
    auto t3 = miwa_even({X(1), X(2)}, 3);
    CHECK(t3.at(1) == (X(1) + X(2)) * Rat(2));
}

TEST_CASE("hook Schur at a single Miwa point") {
    // s_(n|m) evaluated at t_k = (2/k) x^k collapses to 2 x^(n+m+1)
    auto t = miwa_even({X(1)}, 21);
    for (int n = 0; n <= 4; ++n)
        for (int m = 0; m <= 4; ++m)
            CHECK(hook_schur(n, m, t) == pow(X(1), n + m + 1) * Rat(2));
}

TEST_CASE("super Miwa substitution") {
    SuperMiwaPair p1{X(1), GEN_ZETA + 1};
    SuperMiwaPair p2{X(2), GEN_ZETA + 2};
    SuperPoly z1 = SuperPoly::gen(GEN_ZETA + 1);
    SuperPoly z2 = SuperPoly::gen(GEN_ZETA + 2);

    // single pair: t_{1/2} = 2 zeta, t_{3/2} = 2 zeta x, t_{5/2} = 2 zeta x^2
    auto st = super_miwa({p1}, 5, 7);
    CHECK(st.even.at(1) == X(1) * Rat(2));
    CHECK(st.even.at(3) == pow(X(1), 3) * Rat(2, 3));
    CHECK(st.odd_at(1) == z1 * Rat(2));
    CHECK(st.odd_at(3) == z1 * X(1) * Rat(2));
    CHECK(st.odd_at(5) == z1 * pow(X(1), 2) * Rat(2));

    // no pairs: everything vanishes
    auto e = super_miwa({}, 3, 3);
    CHECK(e.even.at(1).is_zero());
    CHECK(e.odd_at(1).is_zero());

    // two pairs: t1 = 2(x1 + x2); odd times are sums of tagged terms
    auto st2 = super_miwa({p1, p2}, 3, 3);
    CHECK(st2.even.at(1) == (X(1) + X(2)) * Rat(2));
    CHECK(st2.odd_at(3) == z1 * X(1) * Rat(2) + z2 * X(2) * Rat(2));

    // Grassmann bookkeeping through products of substituted odd times
    auto prod = st2.odd_at(1) * st2.odd_at(3);
    CHECK(prod == z1 * z2 * (X(2) - X(1)) * Rat(4));

    // substitution map plugs the times into formal-generator polynomials
    auto sub = st2.substitution();
    SuperPoly expr = SuperPoly::gen(GEN_T + 1) + SuperPoly::gen(GEN_S + 1);
    CHECK(substitute(expr, sub) ==
          (X(1) + X(2)) * Rat(2) + (z1 + z2) * Rat(2));
}

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <vector>

#include "ckp/fock.hpp"
#include "ckp/partitions.hpp"
#include "ckp/superpoly.hpp"
#include "ckp/symfun.hpp"

using namespace ckp;

namespace {

SuperPoly Z(int k) { return SuperPoly::gen(GEN_Z + k); }
SuperPoly T(int n) { return SuperPoly::gen(GEN_T + n); }
SuperPoly S(int k) { return SuperPoly::gen(GEN_S + k); }

SuperPoly random_state(std::mt19937_64& rng, int terms, long wcap2) {
    std::uniform_int_distribution<int> coef(-3, 3), part(0, 2), len(0, 3);
    SuperPoly s;
    for (int t = 0; t < terms; ++t) {
        Monomial m;
        long w = 0;
        int pieces = len(rng);
        for (int i = 0; i < pieces; ++i) {
            int b = 2 * part(rng) + 1;  // 1, 3, 5
            if (w + b > wcap2) break;
            m.even[GEN_Z + b]++;
            w += b;
        }
        s.add_term(m, Rat(coef(rng)));
    }
    return s;
}

// Independent route for the integer modes: the normally ordered quadratic
// mode sum applied literally, with the annihilation factor acting first.
SuperPoly J_from_mode_sum(int n, const SuperPoly& s) {
    long w2 = max_z_weight2(s);
    int window = int(w2) + 2 * std::abs(n) + 5;
    SuperPoly r;
    for (int c = -window | 1; c <= window; c += 2) {
        int d = -c - 2 * n;
        int first = c, second = d;  // word: phi_c phi_d, phi_d acts first
        if (c < 0 && d > 0) {
            first = d;
            second = c;
        }
        SuperPoly t = apply_phi(second, s);
        if (t.is_zero()) continue;
        t = apply_phi(first, t);
        if (t.is_zero()) continue;
        r += t * Rat(neg_one_pow((c + 1) / 2), 2);
    }
    return r;
}

SuperPoly raising_exp_coeff(int py, const SuperPoly& s) {
    return apply_V(-1, true, 2 * py, 2 * py, s).coeff(2 * py);
}

}  // namespace

TEST_CASE("phi modes: generation, annihilation, exchange relation") {
    CHECK(apply_phi(1, vacuum()) == Z(1));
    CHECK(apply_phi(-1, vacuum()).is_zero());
    CHECK(apply_phi(-1, Z(1)) == vacuum());
    CHECK(apply_phi(-3, Z(3)) == -vacuum());
    CHECK(apply_phi(-5, Z(5)) == vacuum());
    CHECK(apply_phi(3, Z(1)) == Z(1) * Z(3));
    CHECK(apply_phi(-1, Z(1) * Z(1)) == Rat(2) * Z(1));
    CHECK_THROWS(apply_phi(2, vacuum()));
    CHECK_THROWS(apply_phi(0, vacuum()));

    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 4; ++rep) {
        SuperPoly s = random_state(rng, 4, 5);
        for (int a = -5; a <= 5; a += 2)
            for (int b = -5; b <= 5; b += 2) {
                SuperPoly comm =
                    apply_phi(a, apply_phi(b, s)) - apply_phi(b, apply_phi(a, s));
                SuperPoly expect;
                if (a == -b) expect = s * Rat(neg_one_pow((b - 1) / 2));
                CHECK(comm == expect);
            }
    }
}

TEST_CASE("integer modes: explicit actions") {
    CHECK(apply_J(1, vacuum()).is_zero());
    CHECK(apply_J(3, Z(1) * Z(3)).is_zero());
    CHECK(apply_J(2, Z(1) * Z(1)).is_zero());   // even modes act as zero
    CHECK(apply_J(-4, vacuum()).is_zero());
    CHECK(apply_J(0, Z(1)).is_zero());

    // lowering: J_1 = z_1 d_3 + z_3 d_5 + ... + 1/2 d_1^2 (doubled indices)
    CHECK(apply_J(1, Z(1) * Z(1)) == vacuum());
    CHECK(apply_J(1, Z(3)) == Z(1));
    CHECK(apply_J(1, Z(5)) == Z(3));

    // raising: J_{-1} = z_3 d_1 + z_5 d_3 + ... - 1/2 z_1^2
    CHECK(apply_J(-1, vacuum()) == -Rat(1, 2) * Z(1) * Z(1));
    CHECK(apply_J(-1, Z(1) * Z(1) * Z(3)) ==
          -Rat(1, 2) * pow(Z(1), 4) * Z(3) + Rat(2) * Z(1) * Z(3) * Z(3) +
              Z(1) * Z(1) * Z(5));

    // raising quadratic for the third mode alternates sign across the split
    CHECK(apply_J(-3, vacuum()) == -Z(1) * Z(5) + Rat(1, 2) * Z(3) * Z(3));
}

TEST_CASE("integer modes match the normally ordered mode sum") {
    std::mt19937_64 rng(202);
    for (int rep = 0; rep < 3; ++rep) {
        SuperPoly s = random_state(rng, 4, 7);
        for (int n : {1, -1, 3, -3, 5, -5})
            CHECK(apply_J(n, s) == J_from_mode_sum(n, s));
    }
}

TEST_CASE("integer modes: exchange relations and pair expectations") {
    std::mt19937_64 rng(303);
    for (int rep = 0; rep < 3; ++rep) {
        SuperPoly s = random_state(rng, 4, 5);
        for (int n : {1, 3}) {
            SuperPoly comm =
                apply_J(n, apply_J(-n, s)) - apply_J(-n, apply_J(n, s));
            CHECK(comm == s * Rat(-n, 2));
        }
        CHECK(apply_J(1, apply_J(3, s)) == apply_J(3, apply_J(1, s)));
        CHECK(apply_J(1, apply_J(-3, s)) == apply_J(-3, apply_J(1, s)));
        CHECK(apply_J(-1, apply_J(-3, s)) == apply_J(-3, apply_J(-1, s)));
    }
    for (int n : {1, 3, 5}) {
        SuperPoly vev = vacuum_component(apply_J(n, apply_J(-n, vacuum())));
        CHECK(vev == vacuum() * Rat(-n, 2));
    }
}

TEST_CASE("integer modes shift phi modes") {
    std::mt19937_64 rng(404);
    for (int rep = 0; rep < 3; ++rep) {
        SuperPoly s = random_state(rng, 3, 5);
        for (int n : {1, -1, 3, -3})
            for (int a = -5; a <= 5; a += 2) {
                SuperPoly comm =
                    apply_J(n, apply_phi(a, s)) - apply_phi(a, apply_J(n, s));
                CHECK(comm == apply_phi(a - 2 * n, s));
            }
    }
}

TEST_CASE("integer modes are homogeneous of their degree") {
    std::mt19937_64 rng(505);
    SuperPoly s = random_state(rng, 5, 7);
    for (int n : {1, -1, 3, -3})
        for (long w = 0; w <= 7; ++w) {
            SuperPoly slice;
            for (auto& [m, c] : s.terms)
                if (z_weight2(m) == w) slice.add_term(m, c);
            SuperPoly out = apply_J(n, slice);
            for (auto& [m, c] : out.terms) CHECK(z_weight2(m) == w - 2 * n);
        }
}

TEST_CASE("vertex exponentials on the vacuum") {
    LaurentPoly up = apply_V(+1, false, -6, 0, vacuum());
    CHECK(up.coef.size() == 1);
    CHECK(up.coeff(0) == vacuum());
    LaurentPoly upinv = apply_V(+1, true, -6, 0, vacuum());
    CHECK(upinv.coef.size() == 1);
    CHECK(upinv.coeff(0) == vacuum());

    LaurentPoly dninv = apply_V(-1, true, 0, 4, vacuum());
    CHECK(dninv.coeff(0) == vacuum());
    CHECK(dninv.coeff(2) == -Z(1) * Z(1));
    CHECK(dninv.coeff(4) ==
          Rat(1, 2) * pow(Z(1), 4) - Rat(2) * Z(1) * Z(3));

    // the direct exponential differs from the inverse only at odd orders in
    // the modes: the first-order coefficient flips, the second-order agrees
    LaurentPoly dn = apply_V(-1, false, 0, 4, vacuum());
    CHECK(dn.coeff(2) == Z(1) * Z(1));
    CHECK(dn.coeff(4) ==
          Rat(1, 2) * pow(Z(1), 4) - Rat(2) * Z(1) * Z(3));
}

TEST_CASE("field against raising exponential: rational exchange factor") {
    // phi(-z) V_-(y)^{-1} = (1+y/z)/(1-y/z) V_-(y)^{-1} phi(-z), expanded in
    // u = y/z, checked coefficientwise on sample states.
    std::vector<SuperPoly> samples = {vacuum(), Z(1), Z(1) * Z(3)};
    for (auto& s : samples)
        for (int py = 0; py <= 3; ++py)
            for (int pz = -3; pz <= 2; ++pz) {
                SuperPoly lhs = apply_phi(2 * pz + 1, raising_exp_coeff(py, s)) *
                                Rat(neg_one_pow(pz));
                SuperPoly rhs;
                for (int k = 0; k <= py; ++k) {
                    SuperPoly moved = apply_phi(2 * (pz + k) + 1, s);
                    if (moved.is_zero()) continue;
                    rhs += raising_exp_coeff(py - k, moved) *
                           Rat((k ? 2 : 1) * neg_one_pow(pz + k));
                }
                CHECK(lhs == rhs);
            }
}

TEST_CASE("half-integer modes: explicit actions") {
    CHECK(apply_theta_mode(1, vacuum()).is_zero());
    CHECK(apply_theta_mode(-1, vacuum()) == Rat(1, 2) * Z(1));
    CHECK(apply_theta_mode(1, Z(1)) == Rat(1, 2) * vacuum());
    CHECK(apply_theta_mode(1, Z(1) * Z(1)).is_zero());
    CHECK(apply_theta_mode(1, pow(Z(1), 3)) == Rat(3, 2) * Z(1) * Z(1));
    CHECK(apply_theta_mode(1, Z(3)) == Rat(1, 2) * Z(1) * Z(1));
    CHECK(apply_theta_mode(3, Z(3)) == -Rat(3, 2) * vacuum());
    CHECK(apply_theta_mode(3, pow(Z(1), 3)) == -Rat(3) * vacuum());
    CHECK(apply_theta_mode(3, pow(Z(1), 4)) == -Rat(6) * Z(1));
    CHECK(apply_theta_mode(-3, vacuum()) ==
          -Rat(1, 2) * pow(Z(1), 3) + Rat(3, 2) * Z(3));
    CHECK_THROWS(apply_theta_mode(0, vacuum()));
    CHECK_THROWS(apply_theta_mode(2, vacuum()));
}

TEST_CASE("half-integer modes: anticommutators and pair expectations") {
    std::mt19937_64 rng(606);
    for (int rep = 0; rep < 2; ++rep) {
        SuperPoly s = random_state(rng, 3, 5);
        for (int b = -3; b <= 3; b += 2)
            for (int c = -3; c <= 3; c += 2) {
                SuperPoly anti = apply_theta_mode(b, apply_theta_mode(c, s)) +
                                 apply_theta_mode(c, apply_theta_mode(b, s));
                SuperPoly expect;
                if (b == -c)
                    expect = s * Rat(neg_one_pow((b - 1) / 2)) * Rat(b, 4);
                CHECK(anti == expect);
            }
    }
    for (int m = 0; m <= 3; ++m) {
        int b = 2 * m + 1;
        SuperPoly vev = vacuum_component(
            apply_theta_mode(b, apply_theta_mode(-b, vacuum())));
        CHECK(vev == vacuum() * Rat(neg_one_pow(m) * b, 4));
    }
}

TEST_CASE("integer and half-integer modes commute") {
    std::mt19937_64 rng(707);
    for (int rep = 0; rep < 2; ++rep) {
        SuperPoly s = random_state(rng, 3, 5);
        for (int n : {1, -1, 3, -3})
            for (int b : {1, -1, 3, -3}) {
                SuperPoly comm = apply_J(n, apply_theta_mode(b, s)) -
                                 apply_theta_mode(b, apply_J(n, s));
                CHECK(comm.is_zero());
            }
    }
}

TEST_CASE("half-integer modes are homogeneous of their degree") {
    std::mt19937_64 rng(808);
    SuperPoly s = random_state(rng, 5, 7);
    for (int b : {1, -1, 3, -3})
        for (long w = 0; w <= 7; ++w) {
            SuperPoly slice;
            for (auto& [m, c] : s.terms)
                if (z_weight2(m) == w) slice.add_term(m, c);
            SuperPoly out = apply_theta_mode(b, slice);
            for (auto& [m, c] : out.terms) CHECK(z_weight2(m) == w - b);
        }
}

TEST_CASE("basis states and the dual pairing") {
    auto [s1, d1] = basis_ket(OddPartition({1}));
    CHECK(s1 == Z(1));
    CHECK(d1 == Rat(1));
    auto [s11, d11] = basis_ket(OddPartition({1, 1}));
    CHECK(s11 == Z(1) * Z(1));
    CHECK(d11 == Rat(2));
    auto [s31, d31] = basis_ket(OddPartition({3, 1}));
    CHECK(s31 == Z(1) * Z(3));
    CHECK(d31 == Rat(-1));

    CHECK(dual_pairing(OddPartition({1, 1}), s11) == Rat(2) * vacuum());
    CHECK(dual_pairing(OddPartition({3, 1}), s31) == -vacuum());
    CHECK(dual_pairing(OddPartition{}, vacuum()) == vacuum());

    // the pairing is diagonal with value D on the monomial basis
    std::vector<OddPartition> all;
    for (int w = 0; w <= 9; ++w)
        for (auto& la : odd_partitions_of(w)) all.push_back(la);
    for (auto& la : all)
        for (auto& mu : all) {
            SuperPoly val = dual_pairing(la, basis_ket(mu).first);
            if (la == mu)
                CHECK(val == vacuum() * d_squared(la));
            else
                CHECK(val.is_zero());
        }
}

TEST_CASE("evolution applied to the vacuum and small basis states") {
    SuperTimes tv = SuperTimes::formal(9, 9);
    CHECK(apply_gamma(tv, vacuum()) == vacuum());

    auto U = [&](std::vector<int> parts) {
        return vacuum_component(apply_gamma(tv, basis_ket(OddPartition(parts)).first));
    };
    CHECK(U({1}) == Rat(1, 2) * S(1));
    CHECK(U({1, 1}) == T(1));
    CHECK(U({3}) == Rat(1, 2) * T(1) * S(1) - Rat(3, 2) * S(3));
    CHECK(U({1, 1, 1}) == Rat(3, 2) * T(1) * S(1) - Rat(3) * S(3));
    CHECK(U({3, 1}) ==
          Rat(1, 2) * T(1) * T(1) - Rat(3, 4) * S(1) * S(3));
    CHECK(U({1, 1, 1, 1}) ==
          Rat(3) * T(1) * T(1) - Rat(3) * S(1) * S(3));
}

TEST_CASE("group states: creation quadratics") {
    SuperPoly a = SuperPoly::gen(GEN_PARAM + 1);

    auto g1 = GroupElementSpec::quadratic({{{1, 1}, a}});
    CHECK(build_group_state(g1, 4) ==
          vacuum() + a * Z(1) * Z(1) +
              Rat(1, 2) * a * a * pow(Z(1), 4));
    CHECK(build_group_state(g1, 0) == vacuum());

    auto g2 = GroupElementSpec::quadratic({{{1, 3}, a}, {{3, 1}, a}});
    CHECK(build_group_state(g2, 4) == vacuum() + Rat(2) * a * Z(1) * Z(3));

    auto bad = GroupElementSpec::quadratic({{{1, 3}, a}});
    CHECK_THROWS(build_group_state(bad, 4));
    auto badidx = GroupElementSpec::quadratic({{{2, 2}, a}});
    CHECK_THROWS(build_group_state(badidx, 4));
}

TEST_CASE("group states: two-point exponential restricted to creation modes") {
    SuperPoly a = SuperPoly::gen(GEN_PARAM + 1);
    auto g = GroupElementSpec::soliton_spec(Rat(1, 2), Rat(1, 3), a);
    SuperPoly expect = vacuum() + Rat(1, 2) * a * Z(1) * Z(1) +
                       Rat(5, 12) * a * Z(1) * Z(3) +
                       Rat(1, 8) * a * a * pow(Z(1), 4);
    CHECK(build_group_state(g, 4) == expect);

    auto bad = GroupElementSpec::soliton_spec(Rat(1, 2), Rat(-1, 2), a);
    CHECK_THROWS(build_group_state(bad, 4));
    auto zero = GroupElementSpec::soliton_spec(Rat(0), Rat(1, 3), a);
    CHECK_THROWS(build_group_state(zero, 4));
}

TEST_CASE("group states: diagonal pair exponentials have even multiplicities") {
    SuperPoly u1 = SuperPoly::gen(GEN_PARAM + 11);
    SuperPoly u3 = SuperPoly::gen(GEN_PARAM + 13);
    auto g = GroupElementSpec::diagonal({{1, u1}, {3, u3}});
    SuperPoly st = build_group_state(g, 6);
    CHECK(st == vacuum() + u1 * Z(1) * Z(1) +
                    Rat(1, 2) * u1 * u1 * pow(Z(1), 4) +
                    Rat(1, 6) * pow(u1, 3) * pow(Z(1), 6) + u3 * Z(3) * Z(3));
    for (auto& [m, c] : st.terms)
        for (auto& [gid, e] : m.even)
            if (is_z_gen(gid)) CHECK(e % 2 == 0);
}

TEST_CASE("bilinear pairing residual vanishes on group states") {
    SuperPoly a = SuperPoly::gen(GEN_PARAM + 1);

    auto id = GroupElementSpec::quadratic({});
    CHECK(hirota_check(id, 4).empty());

    auto g1 = GroupElementSpec::quadratic({{{1, 1}, a}});
    CHECK(hirota_check(g1, 3).empty());
    CHECK(hirota_check(g1, 5).empty());

    auto g2 = GroupElementSpec::quadratic({{{1, 3}, a}, {{3, 1}, a}, {{1, 1}, a * a}});
    CHECK(hirota_check(g2, 4).empty());

    auto sol = GroupElementSpec::soliton_spec(Rat(1, 2), Rat(1, 3), a);
    CHECK(hirota_check(sol, 3).empty());

    SuperPoly u1 = SuperPoly::gen(GEN_PARAM + 11);
    SuperPoly u3 = SuperPoly::gen(GEN_PARAM + 13);
    auto dg = GroupElementSpec::diagonal({{1, u1}, {3, u3}});
    CHECK(hirota_check(dg, 4).empty());

    // a state that is not a group orbit point fails the residual test
    SuperPoly wrong = vacuum() + Z(1) * Z(1) + pow(Z(1), 4);
    CHECK_FALSE(hirota_residual(wrong, wrong, 4).empty());
}

TEST_CASE("ball process counts: examples and forward/path-tree agreement") {
    OddPartition empty{};
    CHECK(ball_process_count(empty, OddPartition({1, 1})) == Int(1));
    for (int k = 1; k <= 4; ++k)
        CHECK(ball_process_count(empty, OddPartition(std::vector<int>(2 * k, 1))) ==
              Int(1));
    CHECK(ball_process_count(empty, OddPartition({3, 1})) == Int(2));
    CHECK(ball_process_count(OddPartition({1}), OddPartition({3})) == Int(1));
    CHECK(ball_process_count(OddPartition({3}), OddPartition({1})) == Int(0));
    CHECK(ball_process_count(empty, OddPartition({3})) == Int(0));  // parity gap

    // independent route: walk the full tree of event sequences, one path at
    // a time, and tally the endpoints
    auto tally_paths = [](const OddPartition& from, long steps) {
        std::map<OddPartition, Int> tally;
        struct Walker {
            std::map<OddPartition, Int>* out;
            void walk(std::map<int, int> mult, long left) {
                if (left == 0) {
                    std::vector<int> parts;
                    for (auto it = mult.rbegin(); it != mult.rend(); ++it)
                        parts.insert(parts.end(), it->second, it->first);
                    (*out)[OddPartition(parts)] += 1;
                    return;
                }
                {
                    auto grown = mult;
                    grown[1] += 2;
                    walk(grown, left - 1);
                }
                for (auto& [v, m] : mult)
                    for (int pick = 0; pick < m; ++pick) {
                        auto moved = mult;
                        if (--moved[v] == 0) moved.erase(v);
                        moved[v + 2]++;
                        walk(moved, left - 1);
                    }
            }
        } walker{&tally};
        std::map<int, int> m0;
        for (auto& [v, m] : from.multiplicities()) m0[v] = m;
        walker.walk(m0, steps);
        return tally;
    };

    for (long steps = 1; steps <= 5; ++steps) {
        auto tally = tally_paths(empty, steps);
        for (auto& la : odd_partitions_of(int(2 * steps))) {
            Int brute = tally.count(la) ? tally.at(la) : Int(0);
            CHECK(ball_process_count(empty, la) == brute);
        }
    }
    OddPartition from1({1});
    for (long steps = 1; steps <= 4; ++steps) {
        auto tally = tally_paths(from1, steps);
        for (auto& la : odd_partitions_of(int(1 + 2 * steps))) {
            Int brute = tally.count(la) ? tally.at(la) : Int(0);
            CHECK(ball_process_count(from1, la) == brute);
        }
    }
}

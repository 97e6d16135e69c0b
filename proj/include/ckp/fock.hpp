#pragma once

#include <cstdlib>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ckp/laurent.hpp"
#include "ckp/partitions.hpp"
#include "ckp/superpoly.hpp"
#include "ckp/symfun.hpp"

namespace ckp {

// Sentinel meaning "no weight truncation" (operators are exact without it).
constexpr long kNoCap = std::numeric_limits<long>::max() / 4;

inline int neg_one_pow(long e) { return (e % 2 + 2) % 2 ? -1 : 1; }

inline bool is_z_gen(int id) { return gen_kind(id) == GEN_Z; }

inline long z_weight2(const Monomial& m) {
    long w = 0;
    for (auto& [g, e] : m.even)
        if (is_z_gen(g)) w += long(gen_weight2(g)) * e;
    return w;
}

inline long max_z_weight2(const SuperPoly& s) {
    long w = 0;
    for (auto& [m, c] : s.terms) w = std::max(w, z_weight2(m));
    return w;
}

inline SuperPoly truncate_z_weight2(const SuperPoly& s, long cap2) {
    if (cap2 >= kNoCap) return s;
    SuperPoly r;
    for (auto& [m, c] : s.terms)
        if (z_weight2(m) <= cap2) r.terms.emplace(m, c);
    return r;
}

inline SuperPoly vacuum() { return SuperPoly::one(); }

// Coefficient of the empty z-monomial: every term free of z generators.
inline SuperPoly vacuum_component(const SuperPoly& s) {
    SuperPoly r;
    for (auto& [m, c] : s.terms)
        if (z_weight2(m) == 0) r.terms.emplace(m, c);
    return r;
}

// phi mode of doubled index a (odd, signed): multiplication by z_{a/2} for
// a > 0, (-1)^((-a-1)/2) times the partial derivative in z_{-a/2} for a < 0.
inline SuperPoly apply_phi(int a, const SuperPoly& s) {
    if (a == 0 || a % 2 == 0) throw std::invalid_argument("apply_phi: index must be odd");
    if (a > 0) return s.times_gen_pow(GEN_Z + a, 1);
    SuperPoly r = s.d_even(GEN_Z - a);
    if (neg_one_pow((-a - 1) / 2) < 0) return -r;
    return r;
}

// Integer current mode J_n. Derived from the normally ordered mode sum
// J_n = 1/2 sum_j (-1)^(j+1/2) :phi_j phi_{-j-n}: acting on polynomial states:
//   n > 0:  sum_b z_b d_{b+2n}  +  1/2 sum_{u+v=2n} (-1)^((v-1)/2) d_u d_v
//   n < 0:  sum_b z_{b+2|n|} d_b  +  1/2 sum_{a+c=2|n|} (-1)^((a+1)/2) z_a z_c
// (indices doubled and odd throughout; ordered pairs in the quadratic sums).
// Even n gives the zero operator.
inline SuperPoly apply_J(int n, const SuperPoly& s, long cap2 = kNoCap) {
    if (n % 2 == 0) return SuperPoly{};
    SuperPoly r;
    long w2 = max_z_weight2(s);
    if (n > 0) {
        for (int b = 1; b + 2 * n <= w2; b += 2)
            r += s.d_even(GEN_Z + b + 2 * n).times_gen_pow(GEN_Z + b, 1);
        for (int u = 1; u < 2 * n; u += 2) {
            int v = 2 * n - u;
            SuperPoly d2 = s.d_even(GEN_Z + v).d_even(GEN_Z + u);
            r += d2 * Rat(neg_one_pow((v - 1) / 2), 2);
        }
    } else {
        int m = -n;
        for (int b = 1; b <= w2; b += 2)
            r += s.d_even(GEN_Z + b).times_gen_pow(GEN_Z + b + 2 * m, 1);
        for (int a = 1; a < 2 * m; a += 2) {
            int c = 2 * m - a;
            r += s.times_gen_pow(GEN_Z + a, 1).times_gen_pow(GEN_Z + c, 1) *
                 Rat(neg_one_pow((a + 1) / 2), 2);
        }
    }
    return truncate_z_weight2(r, cap2);
}

// Truncated z-expansion of the vertex exponential exp(sum_{sign*k>0, odd}
// c_k J_k z^{-k}) with c_k = (inverse ? -1 : +1) * 2/k, applied to s. The
// Laurent key is the doubled z-power; only even keys (integer powers) occur.
// Exact within the window: each power is a finite sum of commuting J-strings.
inline LaurentPoly apply_V(int sign, bool inverse, long lo2, long hi2, const SuperPoly& s,
                           long cap2 = kNoCap) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("apply_V: sign must be +-1");
    LaurentPoly out;
    if (s.is_zero()) return out;
    for (long p2 = lo2; p2 <= hi2; ++p2) {
        if (((p2 % 2) + 2) % 2 != 0) continue;
        long p = p2 / 2;  // actual z-power of this coefficient
        // sign=+1: multisets of k>0 with sum k = -p;  sign=-1: sum m = +p.
        long total = sign > 0 ? -p : p;
        if (total < 0) continue;
        SuperPoly acc;
        for (auto& mu : odd_partitions_of(total)) {
            Rat coef(1);
            for (auto& [k, mult] : mu.multiplicities()) {
                Rat c = Rat(2, k);
                if (inverse) c = -c;
                if (sign < 0) c = -c;  // exponent term for J_{-m} carries (2/k) at k=-m
                coef *= rat_pow(c, mult) / Rat(factorial(mult));
            }
            SuperPoly st = s;
            for (int k : mu.parts) {
                st = apply_J(sign > 0 ? k : -k, st, cap2);
                if (st.is_zero()) break;
            }
            if (!st.is_zero()) acc += st * coef;
        }
        if (!acc.is_zero()) out.add_term(p2, acc);
    }
    return out;
}

// Half-integer current mode of doubled index b (odd, signed): extracts
//   (1/2) [z^{-(b+1)/2}]  V_-(z)^{-1} phi(z) V_+(z)^{-1} s.
// The grading makes every step finite: the inner phi index a satisfies
// a <= -b - p2 (so the final power matches) and survives only when the
// state still contains z_{-a/2} for a < 0.
inline SuperPoly apply_theta_mode(int b, const SuperPoly& s, long cap2 = kNoCap) {
    if (b == 0 || b % 2 == 0)
        throw std::invalid_argument("apply_theta_mode: index must be odd");
    if (s.is_zero()) return SuperPoly{};
    long w2 = max_z_weight2(s);
    long lo2 = -(w2 - (w2 & 1));  // lowering multisets obey 2*sum <= w2
    LaurentPoly low = apply_V(+1, true, lo2, 0, s);
    SuperPoly result;
    for (auto& [pA2, stA] : low.coef) {
        long wA2 = max_z_weight2(stA);
        int a_hi = int(-b - pA2);  // raising power needed afterwards must be >= 0
        for (int a = int(-wA2) | 1; a <= a_hi; a += 2) {
            if (a == 0) continue;
            SuperPoly stB = apply_phi(a, stA);
            if (stB.is_zero()) continue;
            long raise2 = -b - pA2 - a;  // doubled power still missing
            LaurentPoly hi = apply_V(-1, true, raise2, raise2, stB);
            SuperPoly done = hi.coeff(raise2);
            if (!done.is_zero()) result += done;
        }
    }
    result *= Rat(1, 2);
    return truncate_z_weight2(result, cap2);
}

// Basis monomial state for an odd partition together with the squared
// normalization D (the normalized ket is state divided by a square root of D,
// which is never materialized).
inline std::pair<SuperPoly, Rat> basis_ket(const OddPartition& la) {
    Monomial m;
    for (int p : la.parts) m.even[GEN_Z + p]++;
    return {SuperPoly::monomial(m, Rat(1)), d_squared(la)};
}

// Unnormalized dual pairing: applies the annihilation string for la (largest
// part first) and returns the vacuum component. Equals D_la when s is the
// basis monomial of la, and 0 for any other basis monomial.
inline SuperPoly dual_pairing(const OddPartition& la, const SuperPoly& s) {
    SuperPoly r = s;
    for (int p : la.parts) {
        r = apply_phi(-p, r);
        if (r.is_zero()) return r;
    }
    return vacuum_component(r);
}

// Dual pairing against the half-integer mode string of a strict partition:
// applies the modes of alpha with the largest part first, then takes the
// vacuum component.
inline SuperPoly alpha_dual_pairing(const DistinctOddPartition& alpha, const SuperPoly& s) {
    SuperPoly r = s;
    for (int p : alpha.parts) {
        r = apply_theta_mode(p, r);
        if (r.is_zero()) return r;
    }
    return vacuum_component(r);
}

// Lowering half of the evolution operator: first the product of
// (1 + t_{b/2} J_{b/2}) factors with the largest mode applied first (odd time
// values multiply coefficients from the left), then exp(sum_n t_n J_n) one
// integer mode at a time. Both series terminate because every mode lowers the
// z-weight.
inline SuperPoly apply_gamma(const SuperTimes& tv, const SuperPoly& s, long cap2 = kNoCap) {
    SuperPoly r = s;
    long w2 = max_z_weight2(s);
    for (long b = w2 - ((w2 + 1) & 1); b >= 1; b -= 2) {
        SuperPoly tj = tv.odd_at(int(b));
        if (tj.is_zero()) continue;
        r += tj * apply_theta_mode(int(b), r);
    }
    for (long n = 1; 2 * n <= w2; n += 2) {
        SuperPoly tn = tv.even.at(int(n));
        if (tn.is_zero()) continue;
        SuperPoly cur = r;
        long k = 0;
        while (true) {
            ++k;
            cur = apply_J(int(n), cur);
            if (cur.is_zero()) break;
            r += pow(tn, int(k)) * Rat(Int(1), factorial(k)) * cur;
        }
    }
    return truncate_z_weight2(r, cap2);
}

// Specification of the implemented group-orbit elements.
struct GroupElementSpec {
    enum class Kind { quadratic_creation, soliton, diagonal_pair };
    Kind kind = Kind::quadratic_creation;
    // quadratic_creation: symmetric map over doubled odd (n,m) for
    // exp(sum A_nm phi_{n/2} phi_{m/2}).
    std::map<std::pair<int, int>, SuperPoly> A;
    // soliton: exp((amp/2) phi(p) phi(q)) with the double mode series
    // restricted to creation modes.
    Rat p, q;
    SuperPoly amp;
    // diagonal_pair: exp(sum_b u_b phi_{b/2}^2) keyed by doubled odd b.
    std::map<int, SuperPoly> diag;

    static GroupElementSpec quadratic(std::map<std::pair<int, int>, SuperPoly> coeffs) {
        GroupElementSpec g;
        g.kind = Kind::quadratic_creation;
        g.A = std::move(coeffs);
        return g;
    }
    static GroupElementSpec soliton_spec(const Rat& p, const Rat& q, SuperPoly amp) {
        GroupElementSpec g;
        g.kind = Kind::soliton;
        g.p = p;
        g.q = q;
        g.amp = std::move(amp);
        return g;
    }
    static GroupElementSpec diagonal(std::map<int, SuperPoly> u) {
        GroupElementSpec g;
        g.kind = Kind::diagonal_pair;
        g.diag = std::move(u);
        return g;
    }
};

// The state g|0> truncated to z-weight <= cap2. All three kinds reduce to the
// exponential of a pure creation quadratic, so the expansion terminates under
// the weight filter.
inline SuperPoly build_group_state(const GroupElementSpec& g, long cap2) {
    if (cap2 < 0) throw std::invalid_argument("build_group_state: negative cap");
    SuperPoly quad;
    switch (g.kind) {
        case GroupElementSpec::Kind::quadratic_creation: {
            for (auto& [nm, c] : g.A) {
                auto [n, m] = nm;
                if (n <= 0 || m <= 0 || n % 2 == 0 || m % 2 == 0)
                    throw std::invalid_argument("build_group_state: indices must be odd positive");
                auto it = g.A.find({m, n});
                if (it == g.A.end() || !(it->second == c))
                    throw std::invalid_argument("build_group_state: coefficient map must be symmetric");
                if (n + m <= cap2)
                    quad += c * SuperPoly::gen(GEN_Z + n) * SuperPoly::gen(GEN_Z + m);
            }
            break;
        }
        case GroupElementSpec::Kind::soliton: {
            if (g.p == 0 || g.q == 0 || g.p + g.q == 0)
                throw std::invalid_argument("build_group_state: need p,q nonzero with p+q nonzero");
            for (int a = 1; a <= cap2; a += 2)
                for (int b = 1; a + b <= cap2; b += 2)
                    quad += g.amp * Rat(1, 2) * rat_pow(g.p, (a - 1) / 2) *
                            rat_pow(g.q, (b - 1) / 2) * SuperPoly::gen(GEN_Z + a) *
                            SuperPoly::gen(GEN_Z + b);
            break;
        }
        case GroupElementSpec::Kind::diagonal_pair: {
            for (auto& [b, u] : g.diag) {
                if (b <= 0 || b % 2 == 0)
                    throw std::invalid_argument("build_group_state: indices must be odd positive");
                if (2 * b <= cap2) quad += u * pow(SuperPoly::gen(GEN_Z + b), 2);
            }
            break;
        }
    }
    if (quad.is_zero()) return vacuum();
    return exp_truncated(quad, cap2);  // coefficient generators are weightless
}

namespace detail {

// Splits a term into its z-monomial and the rest (coefficient monomial).
inline void split_z(const Monomial& m, Monomial& zpart, Monomial& rest) {
    zpart = Monomial{};
    rest = Monomial{};
    for (auto& [g, e] : m.even)
        (is_z_gen(g) ? zpart : rest).even[g] = e;
    rest.odd = m.odd;
}

}  // namespace detail

// Residual of the two-sided mode-pairing operator on left (x) right: the map
// from pairs of z-monomials (combined z-weight <= cap2) to coefficients of
//   sum_a (-1)^((a+1)/2) (phi_a left) (x) (phi_{-a} right).
// Empty result means the bilinear identity holds through that weight.
inline std::map<std::pair<Monomial, Monomial>, SuperPoly> hirota_residual(
    const SuperPoly& left, const SuperPoly& right, long cap2) {
    std::map<std::pair<Monomial, Monomial>, SuperPoly> res;
    for (int a = -int(cap2) | 1; a <= cap2; a += 2) {
        if (a == 0) continue;
        SuperPoly L = apply_phi(a, left);
        if (L.is_zero()) continue;
        SuperPoly R = apply_phi(-a, right);
        if (R.is_zero()) continue;
        Rat sgn(neg_one_pow((a + 1) / 2));
        for (auto& [ml, cl] : L.terms) {
            long wl = z_weight2(ml);
            if (wl > cap2) continue;
            Monomial zl, restl;
            detail::split_z(ml, zl, restl);
            for (auto& [mr, cr] : R.terms) {
                if (wl + z_weight2(mr) > cap2) continue;
                Monomial zr, restr;
                detail::split_z(mr, zr, restr);
                SuperPoly contrib = SuperPoly::monomial(restl, cl * sgn) *
                                    SuperPoly::monomial(restr, cr);
                if (contrib.is_zero()) continue;
                auto key = std::make_pair(zl, zr);
                auto it = res.find(key);
                if (it == res.end())
                    res.emplace(key, contrib);
                else {
                    it->second += contrib;
                    if (it->second.is_zero()) res.erase(it);
                }
            }
        }
    }
    return res;
}

// Bilinear identity residuals for a group element: the state is built out to
// twice the requested weight so that every reported component is exact.
inline std::map<std::pair<Monomial, Monomial>, SuperPoly> hirota_check(
    const GroupElementSpec& g, long cap2) {
    SuperPoly s = build_group_state(g, 2 * cap2);
    return hirota_residual(s, s, cap2);
}

// Number of event sequences taking configuration mu to configuration la,
// where each step either creates two balls in the first basket or moves one
// ball (m_i choices from basket i) two baskets up. Computed by forward
// dynamic programming over configurations of bounded weight.
inline Int ball_process_count(const OddPartition& mu, const OddPartition& la) {
    long diff = la.weight() - mu.weight();
    if (diff < 0 || diff % 2) return Int(0);
    long steps = diff / 2;
    std::map<OddPartition, Int> cur;
    cur[mu] = 1;
    for (long s = 0; s < steps; ++s) {
        std::map<OddPartition, Int> next;
        for (auto& [cfg, ways] : cur) {
            auto mults = cfg.multiplicities();
            {  // two new balls in the first basket
                auto grown = mults;
                grown[1] += 2;
                std::vector<int> parts;
                for (auto it = grown.rbegin(); it != grown.rend(); ++it)
                    parts.insert(parts.end(), it->second, it->first);
                OddPartition nxt(parts);
                if (nxt.weight() <= la.weight()) next[nxt] += ways;
            }
            for (auto& [val, mult] : mults) {  // move one ball up by two
                auto moved = mults;
                if (--moved[val] == 0) moved.erase(val);
                moved[val + 2]++;
                std::vector<int> parts;
                for (auto it = moved.rbegin(); it != moved.rend(); ++it)
                    parts.insert(parts.end(), it->second, it->first);
                OddPartition nxt(parts);
                if (nxt.weight() <= la.weight()) next[nxt] += ways * mult;
            }
        }
        cur = std::move(next);
    }
    auto it = cur.find(la);
    return it == cur.end() ? Int(0) : it->second;
}

}  // namespace ckp

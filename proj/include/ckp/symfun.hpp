#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ckp/superpoly.hpp"

namespace ckp {

// Finite collection of the even times t_1, t_3, t_5, ... indexed by odd
// positive integers. Entries may be formal generators, scalars, or
// polynomials in other generators; even-indexed times are identically zero.
struct EvenTimes {
    std::map<int, SuperPoly> val;

    static EvenTimes formal(int n_max) {
        EvenTimes t;
        for (int n = 1; n <= n_max; n += 2) t.val[n] = SuperPoly::gen(GEN_T + n);
        return t;
    }

    void set(int j, SuperPoly v) {
        if (j <= 0 || j % 2 == 0)
            throw std::invalid_argument("EvenTimes: index must be odd positive");
        val[j] = std::move(v);
    }

    SuperPoly at(int j) const {
        auto it = val.find(j);
        return it == val.end() ? SuperPoly{} : it->second;
    }
};

namespace detail {

// h_0..h_max from exp(sum_k t_k z^k) via m h_m = sum_k k t_k h_{m-k}.
inline std::vector<SuperPoly> complete_h_list(int max_m, const EvenTimes& t) {
    std::vector<SuperPoly> h(max_m + 1);
    h[0] = SuperPoly::one();
    for (int m = 1; m <= max_m; ++m) {
        SuperPoly acc;
        for (int k = 1; k <= m; ++k) acc += t.at(k) * Rat(k) * h[m - k];
        h[m] = acc * Rat(Int(1), Int(m));
    }
    return h;
}

// e_0..e_max from exp(-sum_k t_k (-z)^k) via n e_n = sum_k (-1)^(k+1) k t_k e_{n-k}.
inline std::vector<SuperPoly> elementary_e_list(int max_n, const EvenTimes& t) {
    std::vector<SuperPoly> e(max_n + 1);
    e[0] = SuperPoly::one();
    for (int n = 1; n <= max_n; ++n) {
        SuperPoly acc;
        for (int k = 1; k <= n; ++k) {
            SuperPoly c = t.at(k) * Rat(k) * e[n - k];
            if (k % 2 == 0)
                acc -= c;
            else
                acc += c;
        }
        e[n] = acc * Rat(Int(1), Int(n));
    }
    return e;
}

}  // namespace detail

inline SuperPoly complete_h(int n, const EvenTimes& t) {
    if (n < 0) throw std::invalid_argument("complete_h: negative index");
    return detail::complete_h_list(n, t)[n];
}

inline SuperPoly elementary_e(int n, const EvenTimes& t) {
    if (n < 0) throw std::invalid_argument("elementary_e: negative index");
    return detail::elementary_e_list(n, t)[n];
}

// Hook-shape Schur polynomial
//   s_(n1|n2) = h_{n1+1} e_{n2} - h_{n1+2} e_{n2-1} + ... + (-1)^{n2} h_{n1+n2+1} e_0.
inline SuperPoly hook_schur(int n1, int n2, const EvenTimes& t) {
    if (n1 < 0 || n2 < 0) throw std::invalid_argument("hook_schur: negative index");
    auto h = detail::complete_h_list(n1 + n2 + 1, t);
    auto e = detail::elementary_e_list(n2, t);
    SuperPoly s;
    for (int r = 0; r <= n2; ++r) {
        SuperPoly c = h[n1 + 1 + r] * e[n2 - r];
        if (r % 2)
            s -= c;
        else
            s += c;
    }
    return s;
}

// Even Miwa substitution t_n = (2/n) sum_i x_i^n for odd n <= n_max, where
// x_i is the inverse spectral point 1/z_i.
inline EvenTimes miwa_even(const std::vector<SuperPoly>& xs, int n_max) {
    EvenTimes t;
    for (int n = 1; n <= n_max; n += 2) {
        SuperPoly acc;
        for (auto& x : xs) acc += pow(x, n);
        t.val[n] = acc * Rat(2, n);
    }
    return t;
}

// One point of the super Miwa substitution: an inverse spectral point
// x = 1/z together with its Grassmann tag (an odd generator id).
struct SuperMiwaPair {
    SuperPoly x;
    int zeta;
};

// Full time collection: even times plus odd times t_{k/2} keyed by odd k.
struct SuperTimes {
    EvenTimes even;
    std::map<int, SuperPoly> odd;

    SuperPoly odd_at(int k) const {
        auto it = odd.find(k);
        return it == odd.end() ? SuperPoly{} : it->second;
    }

    SuperTimes negated() const {
        SuperTimes r = *this;
        for (auto& [n, v] : r.even.val) v = -v;
        for (auto& [k, v] : r.odd) v = -v;
        return r;
    }

    // Formal times: every even generator t_n (n odd <= even_max) and every
    // odd generator t_{k/2} (k odd <= odd_max) mapped to itself.
    static SuperTimes formal(int even_max, int odd_max) {
        SuperTimes st;
        st.even = EvenTimes::formal(even_max);
        for (int k = 1; k <= odd_max; k += 2) st.odd[k] = SuperPoly::gen(GEN_S + k);
        return st;
    }

    friend SuperTimes operator+(const SuperTimes& a, const SuperTimes& b) {
        SuperTimes r = a;
        for (auto& [n, v] : b.even.val) {
            auto it = r.even.val.find(n);
            if (it == r.even.val.end())
                r.even.val[n] = v;
            else
                it->second += v;
        }
        for (auto& [k, v] : b.odd) {
            auto it = r.odd.find(k);
            if (it == r.odd.end())
                r.odd[k] = v;
            else
                it->second += v;
        }
        return r;
    }

    // Replacement map for plugging these times into a polynomial written in
    // the formal time generators (the barred copy when barred is set).
    std::map<int, SuperPoly> substitution(bool barred = false) const {
        std::map<int, SuperPoly> m;
        int tk = barred ? GEN_TBAR : GEN_T;
        int sk = barred ? GEN_SBAR : GEN_S;
        for (auto& [n, v] : even.val) m[tk + n] = v;
        for (auto& [k, v] : odd) m[sk + k] = v;
        return m;
    }
};

// Super Miwa substitution
//   t_n     = (2/n) sum_i x_i^n           (odd n <= even_max)
//   t_{k/2} = 2 sum_i zeta_i x_i^{(k-1)/2} (odd k <= odd_max)
inline SuperTimes super_miwa(const std::vector<SuperMiwaPair>& pairs, int even_max,
                             int odd_max) {
    for (auto& p : pairs)
        if (!gen_is_odd(p.zeta))
            throw std::invalid_argument("super_miwa: zeta tag must be an odd generator");
    SuperTimes st;
    std::vector<SuperPoly> xs;
    for (auto& p : pairs) xs.push_back(p.x);
    st.even = miwa_even(xs, even_max);
    for (int k = 1; k <= odd_max; k += 2) {
        SuperPoly acc;
        for (auto& p : pairs) acc += SuperPoly::gen(p.zeta) * pow(p.x, (k - 1) / 2);
        st.odd[k] = acc * Rat(2);
    }
    return st;
}

}  // namespace ckp

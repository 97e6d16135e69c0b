#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckp/rational.hpp"

namespace ckp {

// Generator ids encode a kind (multiple of GEN_STRIDE) plus an index.
// Weighted grading uses doubled weights so everything stays integral.
//
//   GEN_T + n     even time t_n, n odd positive           weight2 = 2n
//   GEN_S + k     odd time t_{k/2}, k odd positive        weight2 = k
//   GEN_TBAR + n  second copy of the even times           weight2 = 2n
//   GEN_SBAR + k  second copy of the odd times            weight2 = k
//   GEN_Z + k     auxiliary Fock variable z_{k/2}         weight2 = k   (commuting)
//   GEN_X + i     inverse spectral point x_i = 1/z_i      weight2 = 2   (Laurent-capable)
//   GEN_XBAR + i  second copy of inverse points           weight2 = 2
//   GEN_ZETA + i  Grassmann marker zeta_i                 weight2 = 1
//   GEN_ZETABAR+i second copy                             weight2 = 1
//   GEN_PARAM + k scalar parameter (amplitudes, weights)  weight2 = 0
//   GEN_RATIO     ratio-order tracker for evaluated points weight2 = 0
enum : int {
    GEN_STRIDE = 1000000,
    GEN_T = 1 * GEN_STRIDE,
    GEN_S = 2 * GEN_STRIDE,
    GEN_TBAR = 3 * GEN_STRIDE,
    GEN_SBAR = 4 * GEN_STRIDE,
    GEN_Z = 5 * GEN_STRIDE,
    GEN_X = 6 * GEN_STRIDE,
    GEN_XBAR = 7 * GEN_STRIDE,
    GEN_ZETA = 8 * GEN_STRIDE,
    GEN_ZETABAR = 9 * GEN_STRIDE,
    GEN_PARAM = 10 * GEN_STRIDE,
    GEN_RATIO = 11 * GEN_STRIDE,
};

inline int gen_kind(int id) { return (id / GEN_STRIDE) * GEN_STRIDE; }
inline int gen_index(int id) { return id % GEN_STRIDE; }

inline bool gen_is_odd(int id) {
    int k = gen_kind(id);
    return k == GEN_S || k == GEN_SBAR || k == GEN_ZETA || k == GEN_ZETABAR;
}

inline bool gen_allows_negative_exp(int id) {
    int k = gen_kind(id);
    return k == GEN_X || k == GEN_XBAR || k == GEN_RATIO;
}

inline int gen_weight2(int id) {
    switch (gen_kind(id)) {
        case GEN_T:
        case GEN_TBAR: return 2 * gen_index(id);
        case GEN_S:
        case GEN_SBAR:
        case GEN_Z: return gen_index(id);
        case GEN_X:
        case GEN_XBAR: return 2;
        case GEN_ZETA:
        case GEN_ZETABAR: return 1;
        case GEN_PARAM: return 0;
        case GEN_RATIO: return 0;
        default: throw std::invalid_argument("unknown generator id");
    }
}

inline std::string gen_name(int id) {
    int k = gen_kind(id), i = gen_index(id);
    auto half = [](int d) { return std::to_string(d) + "/2"; };
    switch (k) {
        case GEN_T: return "t(" + std::to_string(i) + ")";
        case GEN_S: return "t(" + half(i) + ")";
        case GEN_TBAR: return "tb(" + std::to_string(i) + ")";
        case GEN_SBAR: return "tb(" + half(i) + ")";
        case GEN_Z: return "z(" + half(i) + ")";
        case GEN_X: return "x" + std::to_string(i);
        case GEN_XBAR: return "xb" + std::to_string(i);
        case GEN_ZETA: return "zeta" + std::to_string(i);
        case GEN_ZETABAR: return "zetab" + std::to_string(i);
        case GEN_PARAM:
            if (i == 1) return "a";
            if (i > 10) return "u(" + half(i - 10) + ")";
            return "p" + std::to_string(i);
        case GEN_RATIO: return "r";
        default: return "gen" + std::to_string(id);
    }
}

struct Monomial {
    std::map<int, int> even;  // generator id -> exponent, exponent != 0
    std::vector<int> odd;     // strictly increasing generator ids

    auto operator<=>(const Monomial&) const = default;
    bool operator==(const Monomial&) const = default;

    long weight2() const {
        long w = 0;
        for (auto& [g, e] : even) w += long(gen_weight2(g)) * e;
        for (int g : odd) w += gen_weight2(g);
        return w;
    }
    bool has_gen_matching(const std::function<bool(int)>& pred) const {
        for (auto& [g, e] : even)
            if (pred(g)) return true;
        for (int g : odd)
            if (pred(g)) return true;
        return false;
    }
};

// Merges two sorted odd-generator lists; returns the anticommutation sign
// (+1/-1) or 0 when a generator repeats (the product vanishes).
inline int merge_odd_lists(const std::vector<int>& a, const std::vector<int>& b,
                           std::vector<int>& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    long flips = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return 0;
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            out.push_back(b[j++]);
            flips += long(a.size() - i);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return (flips & 1) ? -1 : 1;
}

struct SuperPoly {
    std::map<Monomial, Rat> terms;

    SuperPoly() = default;
    explicit SuperPoly(int v) {
        if (v) terms[Monomial{}] = Rat(v);
    }

    static SuperPoly scalar(const Rat& c) {
        SuperPoly p;
        if (c != 0) p.terms[Monomial{}] = c;
        return p;
    }
    static SuperPoly one() { return scalar(Rat(1)); }
    static SuperPoly gen(int id, const Rat& c = Rat(1)) {
        Monomial m;
        if (gen_is_odd(id))
            m.odd.push_back(id);
        else
            m.even[id] = 1;
        SuperPoly p;
        if (c != 0) p.terms[m] = c;
        return p;
    }
    static SuperPoly monomial(const Monomial& m, const Rat& c) {
        SuperPoly p;
        if (c != 0) p.terms[m] = c;
        return p;
    }

    bool is_zero() const { return terms.empty(); }

    bool operator==(const SuperPoly& o) const { return terms == o.terms; }

    void add_term(const Monomial& m, const Rat& c) {
        if (c == 0) return;
        auto it = terms.find(m);
        if (it == terms.end()) {
            terms.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0) terms.erase(it);
        }
    }

    SuperPoly& operator+=(const SuperPoly& o) {
        for (auto& [m, c] : o.terms) add_term(m, c);
        return *this;
    }
    SuperPoly& operator-=(const SuperPoly& o) {
        for (auto& [m, c] : o.terms) add_term(m, -c);
        return *this;
    }
    friend SuperPoly operator+(SuperPoly a, const SuperPoly& b) { return a += b; }
    friend SuperPoly operator-(SuperPoly a, const SuperPoly& b) { return a -= b; }
    SuperPoly operator-() const {
        SuperPoly r;
        for (auto& [m, c] : terms) r.terms[m] = -c;
        return r;
    }

    SuperPoly& operator*=(const Rat& c) {
        if (c == 0) {
            terms.clear();
            return *this;
        }
        for (auto& [m, v] : terms) v *= c;
        return *this;
    }
    friend SuperPoly operator*(SuperPoly a, const Rat& c) { return a *= c; }
    friend SuperPoly operator*(const Rat& c, SuperPoly a) { return a *= c; }

    friend SuperPoly operator*(const SuperPoly& a, const SuperPoly& b) {
        SuperPoly r;
        std::vector<int> odd;
        for (auto& [ma, ca] : a.terms) {
            for (auto& [mb, cb] : b.terms) {
                int sign = merge_odd_lists(ma.odd, mb.odd, odd);
                if (sign == 0) continue;
                Monomial m;
                m.even = ma.even;
                for (auto& [g, e] : mb.even) {
                    int& x = m.even[g];
                    x += e;
                    if (x == 0) m.even.erase(g);
                }
                m.odd = odd;
                r.add_term(m, ca * cb * sign);
            }
        }
        return r;
    }
    SuperPoly& operator*=(const SuperPoly& o) { return *this = *this * o; }

    // Multiply by a single even generator to a (possibly negative) power.
    SuperPoly times_gen_pow(int id, int e) const {
        if (e == 0) return *this;
        if (gen_is_odd(id)) throw std::invalid_argument("times_gen_pow: odd generator");
        if (e < 0 && !gen_allows_negative_exp(id))
            throw std::invalid_argument("times_gen_pow: negative power not allowed here");
        SuperPoly r;
        for (auto& [m, c] : terms) {
            Monomial n = m;
            int& x = n.even[id];
            x += e;
            if (x == 0) n.even.erase(id);
            r.terms[n] = c;
        }
        return r;
    }

    Rat coeff(const Monomial& m) const {
        auto it = terms.find(m);
        return it == terms.end() ? Rat(0) : it->second;
    }
    Rat constant_term() const { return coeff(Monomial{}); }

    long max_weight2() const {
        long w = 0;
        for (auto& [m, c] : terms) w = std::max(w, m.weight2());
        return w;
    }

    SuperPoly truncate_weight2(long cap2) const {
        SuperPoly r;
        for (auto& [m, c] : terms)
            if (m.weight2() <= cap2) r.terms.emplace(m, c);
        return r;
    }

    SuperPoly weight2_slice(long w2) const {
        SuperPoly r;
        for (auto& [m, c] : terms)
            if (m.weight2() == w2) r.terms.emplace(m, c);
        return r;
    }

    // Flip the sign of each occurrence of the matched generators.
    SuperPoly negate_gens(const std::function<bool(int)>& pred) const {
        SuperPoly r;
        for (auto& [m, c] : terms) {
            long count = 0;
            for (auto& [g, e] : m.even)
                if (pred(g)) count += e;
            for (int g : m.odd)
                if (pred(g)) count += 1;
            r.terms.emplace(m, (count & 1) ? -c : c);
        }
        return r;
    }

    // Drop every term containing a matched generator (sets those to zero).
    SuperPoly zero_gens(const std::function<bool(int)>& pred) const {
        SuperPoly r;
        for (auto& [m, c] : terms)
            if (!m.has_gen_matching(pred)) r.terms.emplace(m, c);
        return r;
    }

    // Left partial derivative with respect to an even generator.
    SuperPoly d_even(int id) const {
        if (gen_is_odd(id)) throw std::invalid_argument("d_even: odd generator");
        SuperPoly r;
        for (auto& [m, c] : terms) {
            auto it = m.even.find(id);
            if (it == m.even.end()) continue;
            Monomial n = m;
            int e = it->second;
            if (e == 1)
                n.even.erase(id);
            else
                n.even[id] = e - 1;
            r.add_term(n, c * e);
        }
        return r;
    }

    // Left partial derivative with respect to an odd generator:
    // d/dg (g1 g2 ... gq) picks out g = gi with sign (-1)^(i-1).
    SuperPoly d_odd(int id) const {
        if (!gen_is_odd(id)) throw std::invalid_argument("d_odd: even generator");
        SuperPoly r;
        for (auto& [m, c] : terms) {
            auto it = std::find(m.odd.begin(), m.odd.end(), id);
            if (it == m.odd.end()) continue;
            long pos = it - m.odd.begin();
            Monomial n = m;
            n.odd.erase(n.odd.begin() + pos);
            r.add_term(n, (pos & 1) ? -c : c);
        }
        return r;
    }
};

inline SuperPoly pow(const SuperPoly& p, int e) {
    if (e == 0) return SuperPoly::one();
    if (e < 0) {
        if (p.terms.size() != 1) throw std::invalid_argument("pow: negative power of non-monomial");
        auto& [m, c] = *p.terms.begin();
        if (!m.odd.empty()) throw std::invalid_argument("pow: negative power of odd monomial");
        Monomial inv;
        for (auto& [g, x] : m.even) {
            inv.even[g] = x * e;
            if (inv.even[g] < 0 && !gen_allows_negative_exp(g))
                throw std::invalid_argument("pow: negative power not allowed for this generator");
        }
        return SuperPoly::monomial(inv, rat_pow(c, e));
    }
    SuperPoly acc = SuperPoly::one(), b = p;
    int n = e;
    while (n > 0) {
        if (n & 1) acc *= b;
        b = (n >>= 1) ? b * b : b;
    }
    return acc;
}

// exp of a polynomial with zero constant term, truncated to weight2 <= cap2.
// Terms of weight 0 (parameters) in p are rejected too: the series would not
// terminate under the weight filter.
inline SuperPoly exp_truncated(const SuperPoly& p, long cap2) {
    for (auto& [m, c] : p.terms)
        if (m.weight2() == 0)
            throw std::invalid_argument("exp_truncated: argument has weight-zero terms");
    SuperPoly q = p.truncate_weight2(cap2);
    SuperPoly acc = SuperPoly::one(), term = SuperPoly::one();
    long k = 0;
    while (true) {
        ++k;
        term = (term * q).truncate_weight2(cap2);
        term *= Rat(Int(1), Int(k));
        if (term.is_zero()) break;
        acc += term;
    }
    return acc;
}

// Substitute generators by polynomials. Unlisted generators stay themselves.
// Odd generators are replaced in ascending canonical order, so the Grassmann
// bookkeeping of the result is entirely handled by supercommutative products.
inline SuperPoly substitute(const SuperPoly& p, const std::map<int, SuperPoly>& repl) {
    SuperPoly out;
    for (auto& [m, c] : p.terms) {
        SuperPoly term = SuperPoly::scalar(c);
        for (auto& [g, e] : m.even) {
            auto it = repl.find(g);
            if (it == repl.end()) {
                Monomial n;
                n.even[g] = e;
                term *= SuperPoly::monomial(n, Rat(1));
            } else {
                term *= pow(it->second, e);
            }
        }
        for (int g : m.odd) {
            auto it = repl.find(g);
            if (it == repl.end())
                term *= SuperPoly::gen(g);
            else
                term *= it->second;
        }
        out += term;
    }
    return out;
}

// Evaluate listed even generators at rational values (a special case of
// substitute that avoids building scalar polynomials at every step).
inline SuperPoly evaluate_even(const SuperPoly& p, const std::map<int, Rat>& vals) {
    SuperPoly out;
    for (auto& [m, c] : p.terms) {
        Rat v = c;
        Monomial n;
        bool dead = false;
        for (auto& [g, e] : m.even) {
            auto it = vals.find(g);
            if (it == vals.end()) {
                n.even[g] = e;
            } else {
                if (it->second == 0 && e > 0) {
                    dead = true;
                    break;
                }
                v *= rat_pow(it->second, e);
            }
        }
        if (dead) continue;
        n.odd = m.odd;
        out.add_term(n, v);
    }
    return out;
}

inline std::string monomial_str(const Monomial& m) {
    if (m.even.empty() && m.odd.empty()) return "1";
    std::string s;
    auto app = [&s](const std::string& f) {
        if (!s.empty()) s += "*";
        s += f;
    };
    for (auto& [g, e] : m.even) {
        std::string f = gen_name(g);
        if (e != 1) f += "^" + std::to_string(e);
        app(f);
    }
    for (int g : m.odd) app(gen_name(g));
    return s;
}

inline std::string poly_str(const SuperPoly& p) {
    if (p.terms.empty()) return "0";
    std::string s;
    for (auto& [m, c] : p.terms) {
        std::string cs = rat_str(c);
        if (!s.empty()) {
            if (!cs.empty() && cs[0] == '-') {
                s += " - ";
                cs = cs.substr(1);
            } else {
                s += " + ";
            }
        }
        s += cs;
        std::string ms = monomial_str(m);
        if (ms != "1") s += "*" + ms;
    }
    return s;
}

}  // namespace ckp

#pragma once

#include <map>
#include <stdexcept>

#include "ckp/superpoly.hpp"

namespace ckp {

// Finitely supported Laurent polynomial in one formal variable, exponents
// stored doubled so half-integer powers stay integral. Coefficients are any
// ring type with +, *, unary -, ==, default-constructed zero.
template <class C>
struct Laurent {
    std::map<int, C> coef;  // doubled exponent -> coefficient

    static Laurent term(int exp2, const C& c) {
        Laurent l;
        if (!(c == C{})) l.coef[exp2] = c;
        return l;
    }

    bool is_zero() const { return coef.empty(); }

    void add_term(int exp2, const C& c) {
        if (c == C{}) return;
        auto it = coef.find(exp2);
        if (it == coef.end()) {
            coef.emplace(exp2, c);
        } else {
            it->second = it->second + c;
            if (it->second == C{}) coef.erase(it);
        }
    }

    Laurent& operator+=(const Laurent& o) {
        for (auto& [e, c] : o.coef) add_term(e, c);
        return *this;
    }
    friend Laurent operator+(Laurent a, const Laurent& b) { return a += b; }
    Laurent operator-() const {
        Laurent r;
        for (auto& [e, c] : coef) r.coef[e] = -c;
        return r;
    }
    friend Laurent operator-(Laurent a, const Laurent& b) { return a + (-b); }

    friend Laurent operator*(const Laurent& a, const Laurent& b) {
        Laurent r;
        for (auto& [ea, ca] : a.coef)
            for (auto& [eb, cb] : b.coef) r.add_term(ea + eb, ca * cb);
        return r;
    }

    Laurent scaled(const C& c) const {
        Laurent r;
        for (auto& [e, v] : coef) r.add_term(e, v * c);
        return r;
    }

    // Keep only exponents in [lo2, hi2].
    Laurent window(int lo2, int hi2) const {
        Laurent r;
        for (auto& [e, c] : coef)
            if (lo2 <= e && e <= hi2) r.coef.emplace(e, c);
        return r;
    }

    C coeff(int exp2) const {
        auto it = coef.find(exp2);
        return it == coef.end() ? C{} : it->second;
    }

    // Coefficient of z^{-1}. A series supported entirely on half-integer
    // exponents cannot contain z^{-1}; asking for its residue is a grading
    // bug, reported as an error rather than silently returning zero.
    C residue() const {
        if (!coef.empty()) {
            bool all_half = true;
            for (auto& [e, c] : coef)
                if (e % 2 == 0) {
                    all_half = false;
                    break;
                }
            if (all_half) throw std::logic_error("residue of a half-integer-graded series");
        }
        return coeff(-2);
    }
};

using LaurentPoly = Laurent<SuperPoly>;

}  // namespace ckp

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "ckp/rational.hpp"

namespace ckp {

// Dense square matrix over an arbitrary commutative coefficient ring.
template <class T>
struct SquareMatrix {
    int n = 0;
    std::vector<T> a;

    SquareMatrix() = default;
    explicit SquareMatrix(int order) : n(order), a(std::size_t(order) * order) {}

    T& at(int i, int j) { return a[std::size_t(i) * n + j]; }
    const T& at(int i, int j) const { return a[std::size_t(i) * n + j]; }

    static SquareMatrix build(int order, const std::function<T(int, int)>& f) {
        SquareMatrix m(order);
        for (int i = 0; i < order; ++i)
            for (int j = 0; j < order; ++j) m.at(i, j) = f(i, j);
        return m;
    }
};

namespace detail {

template <class T>
T pf_rec(const SquareMatrix<T>& A, std::uint32_t mask, std::map<std::uint32_t, T>& memo) {
    if (mask == 0) return T{1};
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    int first = 0;
    while (!(mask & (1u << first))) ++first;
    std::uint32_t rest = mask & ~(1u << first);
    T result{};
    int pos = 0;  // position of the partner within the remaining index list
    for (int j = first + 1; j < A.n; ++j) {
        if (!(rest & (1u << j))) continue;
        T sub = pf_rec(A, rest & ~(1u << j), memo);
        T term = A.at(first, j) * sub;
        if (pos % 2 == 0)
            result = result + term;
        else
            result = result - term;
        ++pos;
    }
    memo.emplace(mask, result);
    return result;
}

template <class T>
T hf_rec(const SquareMatrix<T>& A, std::uint32_t mask, std::map<std::uint32_t, T>& memo) {
    if (mask == 0) return T{1};
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    int first = 0;
    while (!(mask & (1u << first))) ++first;
    std::uint32_t rest = mask & ~(1u << first);
    T result{};
    for (int j = first + 1; j < A.n; ++j) {
        if (!(rest & (1u << j))) continue;
        result = result + A.at(first, j) * hf_rec(A, rest & ~(1u << j), memo);
    }
    memo.emplace(mask, result);
    return result;
}

template <class T>
T det_rec(const SquareMatrix<T>& A, int row, std::uint32_t colmask,
          std::map<std::uint32_t, T>& memo) {
    if (row == A.n) return T{1};
    auto it = memo.find(colmask);
    if (it != memo.end()) return it->second;
    T result{};
    int pos = 0;
    for (int j = 0; j < A.n; ++j) {
        if (!(colmask & (1u << j))) continue;
        T sub = det_rec(A, row + 1, colmask & ~(1u << j), memo);
        T term = A.at(row, j) * sub;
        if (pos % 2 == 0)
            result = result + term;
        else
            result = result - term;
        ++pos;
    }
    memo.emplace(colmask, result);
    return result;
}

}  // namespace detail

template <class T>
T pfaffian(const SquareMatrix<T>& A) {
    if (A.n % 2) throw std::invalid_argument("pfaffian: odd order");
    if (A.n > 20) throw std::invalid_argument("pfaffian: order too large");
    for (int i = 0; i < A.n; ++i) {
        if (!(A.at(i, i) == T{})) throw std::invalid_argument("pfaffian: nonzero diagonal");
        for (int j = i + 1; j < A.n; ++j)
            if (!(A.at(i, j) == -A.at(j, i)))
                throw std::invalid_argument("pfaffian: input not skew-symmetric");
    }
    std::map<std::uint32_t, T> memo;
    std::uint32_t full = (A.n == 32) ? ~0u : ((1u << A.n) - 1);
    return detail::pf_rec(A, full, memo);
}

template <class T>
T hafnian(const SquareMatrix<T>& A) {
    if (A.n % 2) throw std::invalid_argument("hafnian: odd order");
    if (A.n > 20) throw std::invalid_argument("hafnian: order too large");
    std::map<std::uint32_t, T> memo;
    std::uint32_t full = (A.n == 32) ? ~0u : ((1u << A.n) - 1);
    return detail::hf_rec(A, full, memo);
}

template <class T>
T determinant(const SquareMatrix<T>& A) {
    if (A.n > 20) throw std::invalid_argument("determinant: order too large");
    std::map<std::uint32_t, T> memo;
    std::uint32_t full = (A.n == 32) ? ~0u : ((1u << A.n) - 1);
    return detail::det_rec(A, 0, full, memo);
}

// Exact check of the Pfaffian-Hafnian identity
//   Pf[(z_i - z_j)/(z_i + z_j)^2] = prod_{i<j} (z_i - z_j)/(z_i + z_j) * Hf[1/(z_i + z_j)]
// on a tuple of distinct positive rationals of even length.
inline bool verify_pf_hf_identity(const std::vector<Rat>& z) {
    if (z.size() % 2) throw std::invalid_argument("need an even number of points");
    int n = int(z.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (z[i] == z[j]) throw std::invalid_argument("points must be distinct");
    auto P = SquareMatrix<Rat>::build(n, [&](int i, int j) -> Rat {
        if (i == j) return Rat(0);
        Rat s = z[i] + z[j];
        return Rat((z[i] - z[j]) / (s * s));
    });
    auto H = SquareMatrix<Rat>::build(n, [&](int i, int j) -> Rat {
        if (i == j) return Rat(0);
        return Rat(Rat(1) / (z[i] + z[j]));
    });
    Rat lhs = pfaffian(P);
    Rat prefactor(1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) prefactor *= (z[i] - z[j]) / (z[i] + z[j]);
    Rat rhs = prefactor * hafnian(H);
    return lhs == rhs;
}

// Exact Gauss-Jordan inverse; throws on singular input.
inline SquareMatrix<Rat> inverse(const SquareMatrix<Rat>& m) {
    int n = m.n;
    SquareMatrix<Rat> a = m;
    auto r = SquareMatrix<Rat>::build(n, [](int i, int j) { return Rat(i == j ? 1 : 0); });
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int row = col; row < n; ++row)
            if (a.at(row, col) != 0) {
                piv = row;
                break;
            }
        if (piv < 0) throw std::invalid_argument("inverse: singular matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a.at(piv, j), a.at(col, j));
                std::swap(r.at(piv, j), r.at(col, j));
            }
        Rat inv_p = Rat(1) / a.at(col, col);
        for (int j = 0; j < n; ++j) {
            a.at(col, j) *= inv_p;
            r.at(col, j) *= inv_p;
        }
        for (int row = 0; row < n; ++row) {
            if (row == col) continue;
            Rat f = a.at(row, col);
            if (f == 0) continue;
            for (int j = 0; j < n; ++j) {
                a.at(row, j) -= f * a.at(col, j);
                r.at(row, j) -= f * r.at(col, j);
            }
        }
    }
    return r;
}

}  // namespace ckp

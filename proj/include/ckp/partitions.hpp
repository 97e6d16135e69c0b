#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ckp/rational.hpp"

namespace ckp {

// Partition with odd positive parts, weakly decreasing.
struct OddPartition {
    std::vector<int> parts;

    OddPartition() = default;
    explicit OddPartition(std::vector<int> p) : parts(std::move(p)) { validate(); }

    void validate() const {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (parts[i] <= 0 || parts[i] % 2 == 0)
                throw std::invalid_argument("parts must be odd positive");
            if (i && parts[i] > parts[i - 1])
                throw std::invalid_argument("parts must be weakly decreasing");
        }
    }

    long weight() const {
        long w = 0;
        for (int p : parts) w += p;
        return w;
    }
    int length() const { return int(parts.size()); }
    bool empty() const { return parts.empty(); }

    std::map<int, int> multiplicities() const {
        std::map<int, int> m;
        for (int p : parts) ++m[p];
        return m;
    }
    // n_i with part = 2 n_i + 1
    std::vector<int> hook_indices() const {
        std::vector<int> n;
        n.reserve(parts.size());
        for (int p : parts) n.push_back((p - 1) / 2);
        return n;
    }

    bool distinct_parts() const {
        for (std::size_t i = 1; i < parts.size(); ++i)
            if (parts[i] == parts[i - 1]) return false;
        return true;
    }

    bool contains(const OddPartition& mu) const {
        if (mu.parts.size() > parts.size()) return false;
        for (std::size_t i = 0; i < mu.parts.size(); ++i)
            if (mu.parts[i] > parts[i]) return false;
        return true;
    }

    bool operator==(const OddPartition&) const = default;
    auto operator<=>(const OddPartition&) const = default;

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(parts[i]);
        }
        return s;
    }

    static OddPartition parse(const std::string& s) {
        std::vector<int> parts;
        std::size_t pos = 0;
        while (pos < s.size()) {
            std::size_t comma = s.find(',', pos);
            if (comma == std::string::npos) comma = s.size();
            std::string tok = s.substr(pos, comma - pos);
            if (tok.empty()) throw std::invalid_argument("empty part in partition literal");
            parts.push_back(std::stoi(tok));
            pos = comma + 1;
        }
        return OddPartition(std::move(parts));
    }
};

// D_lambda = d_lambda^2 = (-1)^{(|lambda|-l)/2} * prod m_i!
inline Rat d_squared(const OddPartition& lam) {
    Int prod = 1;
    for (auto& [part, mult] : lam.multiplicities()) prod *= factorial(mult);
    long s = (lam.weight() - lam.length()) / 2;
    return Rat((s & 1) ? -prod : prod);
}

// Partition with strictly decreasing odd parts.
struct DistinctOddPartition {
    std::vector<int> parts;

    DistinctOddPartition() = default;
    explicit DistinctOddPartition(std::vector<int> p) : parts(std::move(p)) { validate(); }

    void validate() const {
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (parts[i] <= 0 || parts[i] % 2 == 0)
                throw std::invalid_argument("parts must be odd positive");
            if (i && parts[i] >= parts[i - 1])
                throw std::invalid_argument("parts must be strictly decreasing");
        }
    }

    long weight() const {
        long w = 0;
        for (int p : parts) w += p;
        return w;
    }
    int length() const { return int(parts.size()); }
    bool has_part(int v) const {
        return std::find(parts.begin(), parts.end(), v) != parts.end();
    }
    bool operator==(const DistinctOddPartition&) const = default;

    OddPartition as_partition() const { return OddPartition(parts); }

    std::string str() const { return as_partition().str(); }
    static DistinctOddPartition parse(const std::string& s) {
        return DistinctOddPartition(OddPartition::parse(s).parts);
    }
};

inline DistinctOddPartition add_part(const DistinctOddPartition& a, int v) {
    if (a.has_part(v)) throw std::invalid_argument("part already present");
    std::vector<int> p = a.parts;
    p.insert(std::upper_bound(p.begin(), p.end(), v, std::greater<int>()), v);
    return DistinctOddPartition(std::move(p));
}

// position is 1-based
inline DistinctOddPartition remove_part(const DistinctOddPartition& a, int position) {
    if (position < 1 || position > a.length()) throw std::out_of_range("part position");
    std::vector<int> p = a.parts;
    p.erase(p.begin() + (position - 1));
    return DistinctOddPartition(std::move(p));
}

inline DistinctOddPartition remove_value(const DistinctOddPartition& a, int v) {
    auto it = std::find(a.parts.begin(), a.parts.end(), v);
    if (it == a.parts.end()) throw std::invalid_argument("part not present");
    return remove_part(a, int(it - a.parts.begin()) + 1);
}

// s(v, alpha) = (-1)^{number of parts of alpha exceeding v}
inline int insertion_sign(int v, const DistinctOddPartition& a) {
    if (a.has_part(v)) throw std::invalid_argument("part already present");
    int bigger = 0;
    for (int p : a.parts)
        if (p > v) ++bigger;
    return (bigger & 1) ? -1 : 1;
}

// Sign of reversing an ordered product of l odd factors: the paper-style
// descending index string versus the canonical ascending monomial.
inline int descending_to_ascending_sign(int l) {
    return ((l / 2) & 1) ? -1 : 1;
}

enum class PartitionFilter { All, EvenLength, EvenMultiplicities, DistinctEv, DistinctOdd };

inline bool partition_matches(const OddPartition& p, PartitionFilter f) {
    switch (f) {
        case PartitionFilter::All: return true;
        case PartitionFilter::EvenLength: return p.length() % 2 == 0;
        case PartitionFilter::EvenMultiplicities: {
            for (auto& [part, mult] : p.multiplicities())
                if (mult % 2) return false;
            return true;
        }
        case PartitionFilter::DistinctEv: return p.distinct_parts() && p.length() % 2 == 0;
        case PartitionFilter::DistinctOdd: return p.distinct_parts() && p.length() % 2 == 1;
    }
    return false;
}

namespace detail {
inline void gen_odd_partitions(long remaining, int max_part, std::vector<int>& cur,
                               std::vector<OddPartition>& out) {
    if (remaining == 0) {
        out.emplace_back(cur);
        return;
    }
    int start = int(std::min<long>(max_part, remaining));
    if (start % 2 == 0) --start;
    for (int p = start; p >= 1; p -= 2) {
        cur.push_back(p);
        gen_odd_partitions(remaining - p, p, cur, out);
        cur.pop_back();
    }
}
}  // namespace detail

// All odd-part partitions of exactly n, by (weight, lexicographic) order.
inline std::vector<OddPartition> odd_partitions_of(long n) {
    std::vector<OddPartition> out;
    if (n < 0) return out;
    std::vector<int> cur;
    int maxp = int(n % 2 ? n : n - 1);
    if (n == 0) {
        out.emplace_back();
        return out;
    }
    detail::gen_odd_partitions(n, maxp, cur, out);
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<OddPartition> enumerate_op(long max_weight, PartitionFilter f) {
    std::vector<OddPartition> out;
    for (long n = 0; n <= max_weight; ++n)
        for (auto& p : odd_partitions_of(n))
            if (partition_matches(p, f)) out.push_back(p);
    return out;
}

// Dense integer power series helpers for the graded-dimension check,
// coefficients indexed by doubled exponent.
namespace qseries {
using Series = std::vector<Int>;

inline Series make_one(int cap2) {
    Series s(std::size_t(cap2) + 1, 0);
    s[0] = 1;
    return s;
}

inline Series mul(const Series& a, const Series& b, int cap2) {
    Series r(std::size_t(cap2) + 1, 0);
    for (std::size_t i = 0; i < a.size() && int(i) <= cap2; ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size() && int(i + j) <= cap2; ++j)
            if (b[j] != 0) r[i + j] += a[i] * b[j];
    }
    return r;
}

// 1/(1 - p^step) truncated
inline Series geometric(int step, int cap2) {
    Series s(std::size_t(cap2) + 1, 0);
    for (int e = 0; e <= cap2; e += step) s[e] = 1;
    return s;
}

// 1 + p^step
inline Series one_plus(int step, int cap2) {
    Series s(std::size_t(cap2) + 1, 0);
    s[0] = 1;
    if (step <= cap2) s[step] = 1;
    return s;
}
}  // namespace qseries

// Verifies, to doubled exponent cap2, that
//  - the number of Fock monomials of each weight equals the coefficient of
//    prod_{k in 1/2+Z_{>=0}} 1/(1-q^k), and
//  - that product divided by prod_{n odd} 1/(1-q^n) equals prod (1+q^k).
inline bool q_dimension_check(int cap2) {
    using namespace qseries;
    Series full = make_one(cap2);
    Series ratio_rhs = make_one(cap2);
    for (int b = 1; b <= cap2; b += 2) {
        full = mul(full, geometric(b, cap2), cap2);
        ratio_rhs = mul(ratio_rhs, one_plus(b, cap2), cap2);
    }
    // direct state count: partitions with parts from {1,3,5,...} by doubled weight
    for (int w = 0; w <= cap2; ++w)
        if (Int(odd_partitions_of(w).size()) != full[w]) return false;
    // full * prod(1 - q^n) over odd integer n (doubled exponent 2n)
    Series lhs = full;
    for (int n = 1; 2 * n <= cap2; n += 2) {
        Series f(std::size_t(cap2) + 1, 0);
        f[0] = 1;
        f[2 * n] = -1;
        lhs = mul(lhs, f, cap2);
    }
    return lhs == ratio_rhs;
}

}  // namespace ckp

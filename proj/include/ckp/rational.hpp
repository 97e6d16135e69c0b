#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ckp {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Rat rat_pow(const Rat& base, long e) {
    if (e == 0) return Rat(1);
    if (e < 0) {
        if (base == 0) throw std::domain_error("rat_pow: zero to negative power");
        return Rat(1) / rat_pow(base, -e);
    }
    Rat acc(1), b = base;
    long n = e;
    while (n > 0) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    return acc;
}

inline Int factorial(long n) {
    if (n < 0) throw std::domain_error("factorial of negative");
    Int r = 1;
    for (long k = 2; k <= n; ++k) r *= k;
    return r;
}

// (n)!! for odd n >= -1; (-1)!! = 1 by convention.
inline Int double_factorial(long n) {
    if (n < -1) throw std::domain_error("double_factorial below -1");
    Int r = 1;
    for (long k = n; k >= 2; k -= 2) r *= k;
    return r;
}

inline std::string rat_str(const Rat& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    return Rat(s);
}

}  // namespace ckp

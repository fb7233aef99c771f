#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace sf {

// Exact rational arithmetic. Stencil weights at order 12 run through
// Vandermonde eliminations whose intermediates overflow any fixed-width
// integer, so the backing integer must be arbitrary precision.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

// Exact r^e for integer exponents. e < 0 flips the fraction; 0^negative is the
// caller's bug and throws via division.
inline Rational rational_pow(const Rational& r, long e) {
    if (e == 0) return Rational(1);
    Rational base = e > 0 ? r : Rational(1) / r;
    unsigned long n = e > 0 ? static_cast<unsigned long>(e) : static_cast<unsigned long>(-e);
    Rational acc(1);
    while (n) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

inline std::string rational_str(const Rational& r) { return r.str(); }

} // namespace sf

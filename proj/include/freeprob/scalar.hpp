#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <type_traits>

namespace freeprob {

// Exact scalar kind for combinatorial identities. Floating kinds (double,
// long double) are used for quadrature-fed computations. A series or engine
// is homogeneous in its scalar kind; mixing kinds is a compile error, and
// conversion to floating point is the explicit lossy operation below.
// Expression templates are disabled so arithmetic composes with generic
// series code.
using Rational = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<boost::multiprecision::backends::cpp_int_backend<>>,
    boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;

template <class S>
inline constexpr bool is_exact_scalar_v = std::is_same_v<S, Rational>;

inline double to_double(const Rational& x) { return x.template convert_to<double>(); }
inline double to_double(double x) { return x; }
inline double to_double(long double x) { return static_cast<double>(x); }

template <class S>
S scalar_from_ratio(long num, long den) {
    if constexpr (is_exact_scalar_v<S>)
        return Rational(num, den);
    else
        return static_cast<S>(num) / static_cast<S>(den);
}

template <class S>
double abs_to_double(const S& x) {
    double v = to_double(x);
    return v < 0 ? -v : v;
}

} // namespace freeprob

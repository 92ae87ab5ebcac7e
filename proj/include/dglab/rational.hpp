#pragma once

#include <gmpxx.h>

#include <string>

namespace dglab {

/// Arbitrary-precision rational; GMP keeps it in lowest terms with a positive
/// denominator after every arithmetic operation.
using Rational = mpq_class;

inline Rational make_rational(const mpz_class& num, const mpz_class& den)
{
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// Always "num/den", including integers ("0/1", "3/1").
inline std::string fraction_string(const Rational& r)
{
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

/// Scalar conversion used by the templates that run both in exact and in
/// floating arithmetic.
template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static double from(const Rational& r) { return r.get_d(); }
    static double from_int(long v) { return static_cast<double>(v); }
};

template <>
struct ScalarTraits<Rational> {
    static Rational from(const Rational& r) { return r; }
    static Rational from_int(long v) { return Rational(v); }
};

} // namespace dglab

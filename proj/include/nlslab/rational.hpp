#pragma once

// Exact rational and complex-rational scalars (boost::multiprecision).

#include <boost/multiprecision/cpp_int.hpp>

#include "nlslab/common.hpp"

namespace nlslab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Doubles are binary rationals, so this conversion is exact.
inline Rational rational_of(double x) {
    if (!std::isfinite(x)) throw NumericalError("rational_of: non-finite value");
    return Rational(x);
}

struct RatC {
    Rational re{0}, im{0};

    RatC() = default;
    RatC(Rational r) : re(std::move(r)) {}
    RatC(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    RatC(long long n) : re(n) {}

    static RatC from(const cplx& z) { return {rational_of(z.real()), rational_of(z.imag())}; }

    bool is_zero() const { return re == 0 && im == 0; }
    RatC conj() const { return {re, -im}; }

    RatC operator-() const { return {-re, -im}; }
    RatC& operator+=(const RatC& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    RatC& operator-=(const RatC& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    friend RatC operator+(RatC a, const RatC& b) { return a += b; }
    friend RatC operator-(RatC a, const RatC& b) { return a -= b; }
    friend RatC operator*(const RatC& a, const RatC& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend RatC operator/(const RatC& a, const RatC& b) {
        Rational den = b.re * b.re + b.im * b.im;
        if (den == 0) throw NumericalError("RatC: division by zero");
        return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
    }
    bool operator==(const RatC&) const = default;

    cplx to_cplx() const { return {to_double(re), to_double(im)}; }
};

}  // namespace nlslab

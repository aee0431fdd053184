#pragma once

// Uniform scalar interface for the polynomial algebra: std::complex<double>
// for numeric pipelines, Radical for exact ones.

#include "nlslab/radical.hpp"

namespace nlslab {

template <class S>
struct ScalarOps;

template <>
struct ScalarOps<cplx> {
    static cplx zero() { return {0.0, 0.0}; }
    static cplx one() { return {1.0, 0.0}; }
    static bool is_zero(const cplx& v) { return v == cplx{0.0, 0.0}; }
    static cplx conj(const cplx& v) { return std::conj(v); }
    static cplx mul_i(const cplx& v) { return {-v.imag(), v.real()}; }
    static cplx from_ratio(long long n, long long d) { return {double(n) / double(d), 0.0}; }
    static cplx from_cplx(const cplx& z) { return z; }
    static cplx to_cplx(const cplx& v) { return v; }
};

template <>
struct ScalarOps<Radical> {
    static Radical zero() { return {}; }
    static Radical one() { return Radical(1); }
    static bool is_zero(const Radical& v) { return v.is_zero(); }
    static Radical conj(const Radical& v) { return v.conj(); }
    static Radical mul_i(const Radical& v) { return v * Radical::i(); }
    static Radical from_ratio(long long n, long long d) {
        return Radical(RatC(Rational(n, d)));
    }
    // exact: doubles are binary rationals
    static Radical from_cplx(const cplx& z) { return Radical(RatC::from(z)); }
    static cplx to_cplx(const Radical& v) { return v.to_cplx(); }
};

}  // namespace nlslab

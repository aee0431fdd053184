#pragma once

// Exact arithmetic in the ring  Q(i)[sqrt(f) : f squarefree]  of complex
// rational combinations of square roots.  Elements are sparse maps
// kernel -> coefficient with squarefree integer kernels, so products reduce
// by a gcd (sqrt(a) sqrt(b) = gcd * sqrt(ab/gcd^2)) and equality with zero is
// literal.  Division rationalizes the denominator one prime at a time with
// the sign-flip conjugation sqrt(f) -> -sqrt(f) for p | f.
//
// This is what makes the small-divisor identities in the normal-form solver
// checkable exactly: frequencies sqrt(mu(mu+2pL^p)) with rational L live here.

#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "nlslab/rational.hpp"

namespace nlslab {
namespace detail {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) { return u64(u128(a) * b % m); }

inline u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) d >>= 1, ++s;
    // deterministic Miller-Rabin bases for 64-bit
    for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
        u64 x = powmod(a % n, d, n);
        if (x == 0 || x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

inline u64 pollard_rho(u64 n) {
    if (n % 2 == 0) return 2;
    u64 c = 1;
    while (true) {
        u64 x = 2, y = 2, d = 1;
        auto f = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
        while (d == 1) {
            x = f(x);
            y = f(f(y));
            d = std::gcd(x > y ? x - y : y - x, n);
        }
        if (d != n) return d;
        ++c;
    }
}

inline void factorize(u64 n, std::map<u64, int>& out) {
    for (u64 p = 2; p * p <= n && p < 100000; ++p)
        while (n % p == 0) {
            ++out[p];
            n /= p;
        }
    if (n == 1) return;
    if (is_prime(n)) {
        ++out[n];
        return;
    }
    u64 d = pollard_rho(n);
    factorize(d, out);
    factorize(n / d, out);
}

// n = s^2 * f with f squarefree; returns {s, f}
inline std::pair<u64, u64> squarefree_decompose(u64 n) {
    std::map<u64, int> fac;
    factorize(n, fac);
    u64 s = 1, f = 1;
    for (auto [p, e] : fac) {
        for (int i = 0; i < e / 2; ++i) s *= p;
        if (e % 2) f *= p;
    }
    return {s, f};
}

}  // namespace detail

class Radical {
  public:
    using Kernel = std::uint64_t;

    Radical() = default;
    Radical(RatC c) {
        if (!c.is_zero()) t_[1] = std::move(c);
    }
    Radical(long long n) : Radical(RatC(n)) {}

    static Radical i() {
        Radical r;
        r.t_[1] = RatC(Rational(0), Rational(1));
        return r;
    }

    // sqrt of a nonnegative rational: sqrt(n/d) = sqrt(n d)/d
    static Radical sqrt_rational(const Rational& r) {
        if (r < 0) throw NumericalError("Radical: sqrt of negative rational");
        if (r == 0) return Radical();
        BigInt prod = numerator(r) * denominator(r);
        if (prod > BigInt(std::uint64_t(1) << 62))
            throw NumericalError("Radical: radicand too large for exact mode");
        auto [s, f] = detail::squarefree_decompose(prod.convert_to<std::uint64_t>());
        Radical out;
        out.t_[f] = RatC(Rational(BigInt(s), denominator(r)));
        return out;
    }

    bool is_zero() const { return t_.empty(); }
    bool is_rational() const { return t_.empty() || (t_.size() == 1 && t_.begin()->first == 1); }
    const std::map<Kernel, RatC>& terms() const { return t_; }

    RatC rational_part() const {
        auto it = t_.find(1);
        return it == t_.end() ? RatC() : it->second;
    }

    Radical conj() const {
        Radical out;
        for (const auto& [k, c] : t_) out.t_[k] = c.conj();
        return out;
    }

    Radical operator-() const {
        Radical out;
        for (const auto& [k, c] : t_) out.t_[k] = -c;
        return out;
    }

    Radical& operator+=(const Radical& o) {
        for (const auto& [k, c] : o.t_) {
            auto it = t_.find(k);
            if (it == t_.end()) {
                t_[k] = c;
            } else {
                it->second += c;
                if (it->second.is_zero()) t_.erase(it);
            }
        }
        return *this;
    }
    Radical& operator-=(const Radical& o) { return *this += -o; }
    friend Radical operator+(Radical a, const Radical& b) { return a += b; }
    friend Radical operator-(Radical a, const Radical& b) { return a -= b; }

    friend Radical operator*(const Radical& a, const Radical& b) {
        Radical out;
        for (const auto& [ka, ca] : a.t_) {
            for (const auto& [kb, cb] : b.t_) {
                Kernel g = std::gcd(ka, kb);
                Kernel kern = (ka / g) * (kb / g);  // squarefree again
                RatC coeff = ca * cb;
                coeff.re *= g;
                coeff.im *= g;
                auto it = out.t_.find(kern);
                if (it == out.t_.end()) {
                    if (!coeff.is_zero()) out.t_[kern] = std::move(coeff);
                } else {
                    it->second += coeff;
                    if (it->second.is_zero()) out.t_.erase(it);
                }
            }
        }
        return out;
    }
    Radical& operator*=(const Radical& o) { return *this = *this * o; }

    friend Radical operator/(Radical num, Radical den) {
        if (den.is_zero()) throw NumericalError("Radical: division by zero");
        while (!den.is_rational()) {
            detail::u64 p = den.smallest_radical_prime();
            Radical flipped = den.flip_prime(p);
            num = num * flipped;
            den = den * flipped;  // p disappears from all kernels
        }
        RatC d = den.rational_part();
        Radical out;
        for (const auto& [k, c] : num.t_) {
            RatC q = c / d;
            if (!q.is_zero()) out.t_[k] = std::move(q);
        }
        return out;
    }

    bool operator==(const Radical&) const = default;

    cplx to_cplx() const {
        cplx acc{0.0, 0.0};
        for (const auto& [k, c] : t_) acc += c.to_cplx() * std::sqrt(double(k));
        return acc;
    }

    std::string str() const {
        if (t_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [k, c] : t_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c.re << (c.im >= 0 ? "+" : "") << c.im << "i)";
            if (k != 1) os << "*sqrt(" << k << ")";
        }
        return os.str();
    }

  private:
    detail::u64 smallest_radical_prime() const {
        for (const auto& [k, c] : t_) {
            if (k == 1) continue;
            std::map<detail::u64, int> fac;
            detail::factorize(k, fac);
            return fac.begin()->first;
        }
        throw NumericalError("Radical: no radical part");
    }

    Radical flip_prime(detail::u64 p) const {
        Radical out;
        for (const auto& [k, c] : t_) out.t_[k] = (k % p == 0) ? -c : c;
        return out;
    }

    std::map<Kernel, RatC> t_;
};

}  // namespace nlslab

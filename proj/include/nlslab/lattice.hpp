#pragma once

// Lattice points of Z^d, shells |n|^2 and the Japanese bracket weight.
//
// Modes carry a total (lexicographic) order so every container keyed by
// modes iterates in one canonical order; serialization and shell vectors
// rely on that.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>

#include "nlslab/common.hpp"

namespace nlslab {

// Shells are keyed by mu = |n|^2, which is an integer for every lattice
// point (|n| itself need not be for d >= 2).
using ShellKey = std::int64_t;

template <int D>
struct Mode {
    static_assert(D >= 1 && D <= 4, "supported lattice dimensions are 1..4");
    std::array<int, D> n{};

    constexpr Mode() = default;
    constexpr explicit Mode(const std::array<int, D>& c) : n(c) {}

    // d=1 convenience
    constexpr explicit Mode(int n0)
        requires(D == 1)
        : n{n0} {}
    constexpr Mode(int n0, int n1)
        requires(D == 2)
        : n{n0, n1} {}

    static constexpr Mode zero() { return Mode{}; }

    bool is_zero() const {
        for (int c : n)
            if (c != 0) return false;
        return true;
    }

    ShellKey norm2() const {
        ShellKey s = 0;
        for (int c : n) s += ShellKey(c) * c;
        return s;
    }

    ShellKey shell() const { return norm2(); }

    // <n> = sqrt(1 + |n|^2), so <0> = 1 and the s=0 norm is plain l^2.
    double bracket() const { return std::sqrt(1.0 + double(norm2())); }

    int max_abs() const {
        int m = 0;
        for (int c : n) m = std::max(m, std::abs(c));
        return m;
    }

    Mode operator-() const {
        Mode r;
        for (int i = 0; i < D; ++i) r.n[i] = -n[i];
        return r;
    }
    Mode operator+(const Mode& o) const {
        Mode r;
        for (int i = 0; i < D; ++i) r.n[i] = n[i] + o.n[i];
        return r;
    }
    Mode operator-(const Mode& o) const {
        Mode r;
        for (int i = 0; i < D; ++i) r.n[i] = n[i] - o.n[i];
        return r;
    }
    Mode& operator+=(const Mode& o) {
        for (int i = 0; i < D; ++i) n[i] += o.n[i];
        return *this;
    }

    auto operator<=>(const Mode&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << '(';
        for (int i = 0; i < D; ++i) os << (i ? "," : "") << n[i];
        os << ')';
        return os.str();
    }
};

template <int D>
std::ostream& operator<<(std::ostream& os, const Mode<D>& m) {
    return os << m.str();
}

inline double shell_bracket(ShellKey mu) { return std::sqrt(1.0 + double(mu)); }

}  // namespace nlslab

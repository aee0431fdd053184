#pragma once

// Shared aliases, constants and error types used across the library.

#include <complex>
#include <stdexcept>
#include <string>

namespace nlslab {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Invalid or inconsistent configuration / arguments.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/overflow or a diverged computation.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A small divisor fell below the configured floor during a homological solve.
struct NearResonanceError : std::runtime_error {
    NearResonanceError(const std::string& msg, double divisor_, double floor_)
        : std::runtime_error(msg), divisor(divisor_), floor(floor_) {}
    double divisor = 0.0;
    double floor = 0.0;
};

}  // namespace nlslab

#pragma once

// Minimal power-of-two complex FFT with precomputed twiddles, plus a d-dim
// wrapper acting on a flat row-major grid.  Self-contained so trajectories
// are bit-reproducible across runs; throughput is ample at the grid sizes
// used here.

#include <cstddef>
#include <vector>

#include "nlslab/common.hpp"

namespace nlslab {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

class Fft1D {
  public:
    explicit Fft1D(int n) : n_(n) {
        if (!is_power_of_two(n)) throw ConfigError("Fft1D: size must be a power of two");
        twiddle_.resize(n / 2);
        for (int k = 0; k < n / 2; ++k) {
            double ang = -2.0 * kPi * k / n;
            twiddle_[k] = {std::cos(ang), std::sin(ang)};
        }
        rev_.resize(n);
        int lg = 0;
        while ((1 << lg) < n) ++lg;
        for (int i = 0; i < n; ++i) {
            unsigned r = 0;
            for (int b = 0; b < lg; ++b)
                if (i & (1 << b)) r |= 1u << (lg - 1 - b);
            rev_[i] = int(r);
        }
    }

    int size() const { return n_; }

    // In-place transform of a strided slice data[offset + i*stride].
    // sign = -1: forward (matches the e^{-ik.x} convention), +1: inverse
    // (unnormalized; callers divide by n when converting to coefficients).
    void transform(cplx* data, std::size_t offset, std::size_t stride, int sign) const {
        scratch_.resize(n_);
        for (int i = 0; i < n_; ++i) scratch_[rev_[i]] = data[offset + i * stride];
        for (int len = 2; len <= n_; len <<= 1) {
            int half = len / 2, step = n_ / len;
            for (int i = 0; i < n_; i += len) {
                for (int j = 0; j < half; ++j) {
                    cplx w = twiddle_[std::size_t(j) * step];
                    if (sign > 0) w = std::conj(w);
                    cplx u = scratch_[i + j];
                    cplx v = scratch_[i + j + half] * w;
                    scratch_[i + j] = u + v;
                    scratch_[i + j + half] = u - v;
                }
            }
        }
        for (int i = 0; i < n_; ++i) data[offset + i * stride] = scratch_[i];
    }

  private:
    int n_;
    std::vector<cplx> twiddle_;
    std::vector<int> rev_;
    mutable std::vector<cplx> scratch_;
};

// d-dimensional transform on an N^d row-major grid, one axis at a time.
template <int D>
class FftND {
  public:
    explicit FftND(int n) : n_(n), fft_(n) {
        total_ = 1;
        for (int i = 0; i < D; ++i) total_ *= std::size_t(n);
    }

    int n() const { return n_; }
    std::size_t total() const { return total_; }

    // Grid values -> Fourier coefficients (normalized measure: divides by N^d).
    void forward(std::vector<cplx>& a) const {
        apply(a, -1);
        double inv = 1.0 / double(total_);
        for (auto& v : a) v *= inv;
    }

    // Fourier coefficients -> grid values.
    void inverse(std::vector<cplx>& a) const { apply(a, +1); }

  private:
    void apply(std::vector<cplx>& a, int sign) const {
        if (a.size() != total_) throw ConfigError("FftND: bad buffer size");
        // axis ax has stride n^(D-1-ax) in row-major layout
        for (int ax = 0; ax < D; ++ax) {
            std::size_t stride = 1;
            for (int i = ax + 1; i < D; ++i) stride *= std::size_t(n_);
            std::size_t block = stride * std::size_t(n_);
            for (std::size_t base = 0; base < total_; base += block)
                for (std::size_t off = 0; off < stride; ++off)
                    fft_.transform(a.data(), base + off, stride, sign);
        }
    }

    int n_;
    Fft1D fft_;
    std::size_t total_;
};

}  // namespace nlslab

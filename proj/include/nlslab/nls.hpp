#pragma once

// Split-step spectral integration of  i dpsi/dt = Laplacian psi + lambda |psi|^{2p} psi
// on T^d, plane-wave reference orbits, conserved quantities, stability runs
// and the Floquet linearization around a plane wave.
//
// Both substeps are exact flows: the linear substep is the multiplier
// e^{i|n|^2 dt'} per coefficient, the nonlinear substep the pointwise
// rotation psi -> psi e^{-i lambda |psi|^{2p} dt'} on the collocation grid.
// Mass is therefore conserved to round-off by construction.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nlslab/fft.hpp"
#include "nlslab/spectral_field.hpp"

namespace nlslab {

enum class Integrator { strang2, yoshida4 };

inline Integrator integrator_from_string(const std::string& s) {
    if (s == "strang2") return Integrator::strang2;
    if (s == "yoshida4") return Integrator::yoshida4;
    throw ConfigError("unknown integrator '" + s + "' (strang2|yoshida4)");
}

struct SimConfig {
    int p = 1;              // nonlinearity exponent, |psi|^{2p} psi
    double lambda = -1.0;   // -1 is the defocusing convention used throughout
    int N_grid = 256;       // collocation points per axis, power of two
    double dt = 1e-3;
    double T_end = 0.0;
    Integrator integrator = Integrator::strang2;
    std::optional<bool> dealias{};  // unset: on iff p >= 2

    // diagnostics / sampling (artifact plumbing, echoed into manifests)
    double sample_interval = 1.0;
    int pert_band = 0;       // largest |n_i| carrying perturbation; 0 -> N_grid/3
    ShellKey sa_shell_max = 9;

    bool dealias_on() const { return dealias.value_or(p >= 2); }

    void validate() const {
        if (p < 1) throw ConfigError("SimConfig: p must be a positive integer");
        if (!is_power_of_two(N_grid)) throw ConfigError("SimConfig: N_grid must be a power of two");
        if (!(dt > 0.0)) throw ConfigError("SimConfig: dt must be positive");
        if (T_end < 0.0) throw ConfigError("SimConfig: T_end must be >= 0");
        if (sample_interval <= 0.0) throw ConfigError("SimConfig: sample_interval must be positive");
    }
};

// Phase rate theta of the exact orbit  psi_m(t) = rho e^{i m.x} e^{-i theta t}:
// inserting the ansatz into the equation gives theta = lambda rho^{2p} - |m|^2.
// (For lambda = -1, m = 0 this is the e^{+i rho^{2p} t} rotation of w_0.)
inline double plane_wave_phase_rate(ShellKey m_norm2, double rho, int p, double lambda) {
    double r2p = std::pow(rho * rho, p);
    return lambda * r2p - double(m_norm2);
}

template <int D>
struct PlaneWaveRef {
    Mode<D> m{};
    double rho = 0.0;
    double theta = 0.0;

    PlaneWaveRef(const Mode<D>& m_, double rho_, int p, double lambda)
        : m(m_), rho(rho_), theta(plane_wave_phase_rate(m_.norm2(), rho_, p, lambda)) {
        if (!(rho_ > 0.0)) throw ConfigError("PlaneWaveRef: rho must be positive");
    }

    cplx coefficient(double t) const { return rho * std::exp(cplx(0.0, -theta * t)); }
};

template <int D>
SpectralField<D> plane_wave(const Mode<D>& m, double rho, const SimConfig& cfg, double t) {
    PlaneWaveRef<D> ref(m, rho, cfg.p, cfg.lambda);
    SpectralField<D> x(cfg.N_grid / 2);
    x.set(m, ref.coefficient(t));
    return x;
}

template <int D>
double mass(const SpectralField<D>& psi) {
    return psi.mass();
}

// ---------------------------------------------------------------------------

struct StabilityRecord {
    std::vector<double> times;
    std::vector<double> orbital_dist;
    std::vector<double> mass;
    std::vector<double> energy;
    std::vector<double> norm_s;  // truncated-model runs record ||y||_s here
    std::map<ShellKey, std::vector<double>> super_actions;
    bool aborted = false;
    std::string abort_reason;
};

template <int D>
class NlsEngine {
  public:
    explicit NlsEngine(const SimConfig& cfg) : cfg_(cfg), fft_(cfg.N_grid) {
        cfg_.validate();
        const int N = cfg_.N_grid;
        const std::size_t total = fft_.total();
        lap_.resize(total);
        keep_.assign(total, 1);
        const int kmax = N / 3;  // 2/3-rule band
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rest = idx;
            double l = 0.0;
            bool keep = true;
            for (int ax = D - 1; ax >= 0; --ax) {
                int j = int(rest % std::size_t(N));
                rest /= std::size_t(N);
                int f = j < N / 2 ? j : j - N;
                l += double(f) * f;
                if (std::abs(f) > kmax) keep = false;
            }
            lap_[idx] = l;
            keep_[idx] = keep ? 1 : 0;
        }
        build_stages();
    }

    const SimConfig& config() const { return cfg_; }
    int grid_size() const { return cfg_.N_grid; }

    std::vector<cplx> to_dense(const SpectralField<D>& x) const {
        std::vector<cplx> a(fft_.total(), cplx{0.0, 0.0});
        const int N = cfg_.N_grid;
        for (const auto& [m, v] : x.coefficients()) {
            if (m.max_abs() > N / 2 - 1)
                throw ConfigError("NlsEngine: mode " + m.str() + " outside grid band");
            a[flat_index(m)] = v;
        }
        return a;
    }

    SpectralField<D> to_field(const std::vector<cplx>& a) const {
        SpectralField<D> x(cfg_.N_grid / 2);
        const int N = cfg_.N_grid;
        for (std::size_t idx = 0; idx < a.size(); ++idx) {
            if (a[idx] == cplx{0.0, 0.0}) continue;
            x.set(mode_of(idx), a[idx]);
        }
        (void)N;
        return x;
    }

    // One full time step of size cfg.dt on a coefficient vector.
    void step(std::vector<cplx>& a) const {
        for (const auto& st : stages_) {
            if (st.linear) {
                const auto& mult = lin_mult_[st.mult_index];
                for (std::size_t i = 0; i < a.size(); ++i) a[i] *= mult[i];
            } else {
                nonlinear_substep(a, st.c);
            }
        }
    }

    double mass(const std::vector<cplx>& a) const {
        double s = 0.0;
        for (const auto& v : a) s += std::norm(v);
        return s;
    }

    // H = sum |n|^2 |psi_n|^2 - (lambda/(p+1)) Int |psi|^{2p+2}, conserved by
    // the flow of the equation as written (the sign map lambda' = -lambda
    // reconciles this with the +1/(p+1) convention used after lambda = -1).
    double energy(const std::vector<cplx>& a) const {
        double kin = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) kin += lap_[i] * std::norm(a[i]);
        grid_ = a;
        fft_.inverse(grid_);
        double pot = 0.0;
        for (const auto& v : grid_) pot += ipow(std::norm(v), cfg_.p + 1);
        pot /= double(fft_.total());
        return kin - cfg_.lambda / double(cfg_.p + 1) * pot;
    }

    std::size_t flat_index(const Mode<D>& m) const {
        const int N = cfg_.N_grid;
        std::size_t idx = 0;
        for (int ax = 0; ax < D; ++ax) idx = idx * std::size_t(N) + std::size_t((m.n[ax] % N + N) % N);
        return idx;
    }

    Mode<D> mode_of(std::size_t idx) const {
        const int N = cfg_.N_grid;
        Mode<D> m;
        for (int ax = D - 1; ax >= 0; --ax) {
            int j = int(idx % std::size_t(N));
            idx /= std::size_t(N);
            m.n[ax] = j < N / 2 ? j : j - N;
        }
        return m;
    }

    void check_finite(const std::vector<cplx>& a, double t) const {
        double s = 0.0;
        for (const auto& v : a) s += std::norm(v);
        if (!std::isfinite(s))
            throw NumericalError("trajectory diverged (NaN/overflow) at t = " + std::to_string(t));
    }

  private:
    struct Stage {
        bool linear;
        double c;
        std::size_t mult_index;  // into lin_mult_ when linear
    };

    static double ipow(double x, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= x;
        return r;
    }

    void build_stages() {
        std::vector<double> nl, lin;
        if (cfg_.integrator == Integrator::strang2) {
            lin = {0.5, 0.5};
            nl = {1.0};
        } else {
            // Yoshida triple jump over the Strang kernel
            const double cbrt2 = std::cbrt(2.0);
            const double w1 = 1.0 / (2.0 - cbrt2);
            const double w0 = -cbrt2 * w1;
            lin = {w1 / 2, (w1 + w0) / 2, (w1 + w0) / 2, w1 / 2};
            nl = {w1, w0, w1};
        }
        for (std::size_t i = 0; i < nl.size() + lin.size(); ++i) {
            bool linear = (i % 2 == 0);
            double c = linear ? lin[i / 2] : nl[i / 2];
            Stage st{linear, c, 0};
            if (linear) {
                std::vector<cplx> mult(lap_.size());
                for (std::size_t k = 0; k < lap_.size(); ++k)
                    mult[k] = std::exp(cplx(0.0, lap_[k] * c * cfg_.dt));
                lin_mult_.push_back(std::move(mult));
                st.mult_index = lin_mult_.size() - 1;
            }
            stages_.push_back(st);
        }
    }

    void nonlinear_substep(std::vector<cplx>& a, double c) const {
        grid_ = a;
        fft_.inverse(grid_);
        const double w = -cfg_.lambda * c * cfg_.dt;
        for (auto& v : grid_) {
            double ph = w * ipow(std::norm(v), cfg_.p);
            v *= cplx(std::cos(ph), std::sin(ph));
        }
        fft_.forward(grid_);
        if (cfg_.dealias_on()) {
            for (std::size_t i = 0; i < grid_.size(); ++i)
                if (!keep_[i]) grid_[i] = cplx{0.0, 0.0};
        }
        a = grid_;
    }

    SimConfig cfg_;
    FftND<D> fft_;
    std::vector<double> lap_;
    std::vector<char> keep_;
    std::vector<Stage> stages_;
    std::vector<std::vector<cplx>> lin_mult_;
    mutable std::vector<cplx> grid_;
};

// Single-step convenience wrapper (tests and small experiments; trajectories
// should hold an engine and a dense coefficient vector).
template <int D>
SpectralField<D> step(const SpectralField<D>& psi, const SimConfig& cfg) {
    NlsEngine<D> eng(cfg);
    auto a = eng.to_dense(psi);
    eng.step(a);
    eng.check_finite(a, cfg.dt);
    return eng.to_field(a);
}

template <int D>
double energy(const SpectralField<D>& psi, const SimConfig& cfg) {
    NlsEngine<D> eng(cfg);
    return eng.energy(eng.to_dense(psi));
}

// ---------------------------------------------------------------------------
// Reproducible perturbation: random phases on a spectrum decaying like
// <n>^{-(s+1)}, rescaled so the H^s norm is exactly eps.  Uniform variates
// are produced from raw mt19937_64 output so the stream does not depend on
// the standard library's distribution implementations.

inline double uniform01(std::mt19937_64& g) { return double(g() >> 11) * 0x1.0p-53; }

template <int D>
SpectralField<D> sample_perturbation(const SimConfig& cfg, double eps, double s,
                                     std::uint64_t seed) {
    SpectralField<D> delta(cfg.N_grid / 2);
    if (eps == 0.0) return delta;
    if (eps < 0.0) throw ConfigError("sample_perturbation: eps must be >= 0");
    const int band = cfg.pert_band > 0 ? cfg.pert_band : cfg.N_grid / 3;
    std::mt19937_64 gen(seed);
    std::array<int, D> c{};
    for (int i = 0; i < D; ++i) c[i] = -band;
    while (true) {
        Mode<D> m(c);
        if (!m.is_zero()) {
            double amp = std::pow(1.0 + double(m.norm2()), -0.5 * (s + 1.0));
            double phase = 2.0 * kPi * uniform01(gen);
            delta.set(m, amp * cplx(std::cos(phase), std::sin(phase)));
        }
        int ax = D - 1;
        while (ax >= 0 && ++c[ax] > band) c[ax--] = -band;
        if (ax < 0) break;
    }
    double nrm = sobolev_norm(delta, s);
    delta *= eps / nrm;
    return delta;
}

// ---------------------------------------------------------------------------
// End-to-end stability run: perturbed plane wave at mode m, sampling the
// demodulated orbital distance, mass, energy and super-actions.

template <int D>
StabilityRecord run_stability(const SimConfig& cfg, const Mode<D>& m, double rho, double eps,
                              double s, std::uint64_t seed) {
    NlsEngine<D> eng(cfg);
    auto pert = sample_perturbation<D>(cfg, eps, s, seed);
    SpectralField<D> psi0 = plane_wave<D>(m, rho, cfg, 0.0);
    psi0 += modulate(pert, m);

    auto a = eng.to_dense(psi0);
    StabilityRecord rec;
    const std::int64_t nsteps = std::llround(cfg.T_end / cfg.dt);
    const std::int64_t every = std::max<std::int64_t>(1, std::llround(cfg.sample_interval / cfg.dt));

    auto sample = [&](double t) {
        auto psi = eng.to_field(a);
        rec.times.push_back(t);
        rec.orbital_dist.push_back(orbital_distance(psi, m, s));
        rec.mass.push_back(eng.mass(a));
        rec.energy.push_back(eng.energy(a));
        // super-actions of the demodulated field; the shift is folded into
        // the shell key so top-of-band modes cannot overflow the cutoff
        std::map<ShellKey, double> sa;
        for (const auto& [k, v] : psi.coefficients()) sa[(k - m).norm2()] += std::norm(v);
        for (ShellKey mu = 1; mu <= cfg.sa_shell_max; ++mu) {
            auto it = sa.find(mu);
            rec.super_actions[mu].push_back(it == sa.end() ? 0.0 : it->second);
        }
    };

    sample(0.0);
    try {
        for (std::int64_t k = 1; k <= nsteps; ++k) {
            eng.step(a);
            if (k % every == 0 || k == nsteps) {
                double t = double(k) * cfg.dt;
                eng.check_finite(a, t);
                sample(t);
            }
        }
    } catch (const NumericalError& e) {
        rec.aborted = true;
        rec.abort_reason = e.what();
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Appendix-style Floquet linearization around w_0(t) = rho e^{i rho^{2p} t}
// for the coefficient pair (psi_n, conj(psi_{-n})), together with the
// constant-coefficient matrix after v_n = psi_n e^{-i rho^{2p} t}.

using Mat2 = std::array<std::array<cplx, 2>, 2>;

struct FloquetMatrices {
    Mat2 periodic;
    Mat2 constant;
};

template <int D>
FloquetMatrices floquet_matrix(const Mode<D>& n, double rho, int p, double t) {
    const double r2p = std::pow(rho * rho, p);
    const double r2pm1 = p >= 1 ? std::pow(rho * rho, p - 1) : 1.0;
    const double n2 = double(n.norm2());
    const cplx w0sq = rho * rho * std::exp(cplx(0.0, 2.0 * r2p * t));
    FloquetMatrices fm;
    fm.periodic = {{{cplx(-n2 - (p + 1) * r2p), -double(p) * r2pm1 * w0sq},
                    {double(p) * r2pm1 * std::conj(w0sq), cplx(n2 + (p + 1) * r2p)}}};
    fm.constant = {{{cplx(-n2 - p * r2p), cplx(-double(p) * r2p)},
                    {cplx(double(p) * r2p), cplx(n2 + p * r2p)}}};
    return fm;
}

inline std::pair<cplx, cplx> eigenvalues2(const Mat2& m) {
    cplx tr = m[0][0] + m[1][1];
    cplx det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    cplx disc = std::sqrt(tr * tr - 4.0 * det);
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

}  // namespace nlslab

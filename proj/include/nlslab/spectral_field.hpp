#pragma once

// Finitely supported Fourier coefficient vectors on a truncated lattice,
// Sobolev norms, shell decompositions, super-actions and the demodulated
// orbital-distance diagnostics.
//
// Normalization: Lebesgue measure on T^d is normalized, so the coefficient
// vector of rho*e^{im.x} is a single entry rho and the l^2 mass of the
// coefficients equals ||.||_{L^2}^2 of the represented function.

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "json.hpp"
#include "nlslab/lattice.hpp"

namespace nlslab {

template <int D>
class SpectralField {
  public:
    using ModeT = Mode<D>;
    using Map = std::map<ModeT, cplx>;

    SpectralField() = default;
    explicit SpectralField(int n_lat) : n_lat_(n_lat) {
        if (n_lat < 0) throw ConfigError("SpectralField: cutoff must be nonnegative");
    }

    int cutoff() const { return n_lat_; }
    static constexpr int dim() { return D; }

    const Map& coefficients() const { return coef_; }
    bool empty() const { return coef_.empty(); }
    std::size_t support_size() const { return coef_.size(); }

    cplx at(const ModeT& m) const {
        auto it = coef_.find(m);
        return it == coef_.end() ? cplx{0.0, 0.0} : it->second;
    }

    void set(const ModeT& m, cplx v) {
        check_within_cutoff(m);
        if (v == cplx{0.0, 0.0})
            coef_.erase(m);
        else
            coef_[m] = v;
    }

    void add(const ModeT& m, cplx v) { set(m, at(m) + v); }

    double mass() const {
        double s = 0.0;
        for (const auto& [m, v] : coef_) s += std::norm(v);
        return s;
    }

    SpectralField& operator*=(cplx c) {
        for (auto& [m, v] : coef_) v *= c;
        return *this;
    }
    SpectralField& operator+=(const SpectralField& o) {
        for (const auto& [m, v] : o.coef_) add(m, v);
        return *this;
    }

    bool operator==(const SpectralField&) const = default;

  private:
    void check_within_cutoff(const ModeT& m) const {
        if (n_lat_ > 0 && m.max_abs() > n_lat_)
            throw ConfigError("SpectralField: mode " + m.str() + " exceeds cutoff " +
                              std::to_string(n_lat_));
    }

    int n_lat_ = 0;  // 0 = unbounded
    Map coef_;
};

// ---------------------------------------------------------------------------
// Sobolev norms.  Weight convention: <n> = sqrt(1+|n|^2).

inline void check_sobolev_exponent(double s) {
    if (s < 0.0 || !std::isfinite(s)) throw ConfigError("Sobolev exponent must be >= 0");
}

template <int D>
double sobolev_norm(const SpectralField<D>& x, double s) {
    check_sobolev_exponent(s);
    double acc = 0.0;
    for (const auto& [m, v] : x.coefficients())
        acc += std::norm(v) * std::pow(1.0 + double(m.norm2()), s);
    return std::sqrt(acc);
}

// <a,b>_s = sum a_n conj(b_n) <n>^{2s}
template <int D>
cplx sobolev_inner(const SpectralField<D>& a, const SpectralField<D>& b, double s) {
    check_sobolev_exponent(s);
    cplx acc{0.0, 0.0};
    for (const auto& [m, v] : a.coefficients()) {
        cplx w = b.at(m);
        if (w != cplx{0.0, 0.0}) acc += v * std::conj(w) * std::pow(1.0 + double(m.norm2()), s);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Shells.  Every supported mode lands in exactly one shell mu = |n|^2; the
// within-shell ordering is the canonical mode order.

template <int D>
std::map<ShellKey, std::vector<cplx>> shell_decompose(const SpectralField<D>& x) {
    std::map<ShellKey, std::vector<cplx>> shells;
    for (const auto& [m, v] : x.coefficients()) shells[m.shell()].push_back(v);
    return shells;
}

template <int D>
std::map<ShellKey, double> super_actions(const SpectralField<D>& x) {
    std::map<ShellKey, double> sa;
    for (const auto& [m, v] : x.coefficients()) sa[m.shell()] += std::norm(v);
    return sa;
}

// ---------------------------------------------------------------------------
// Modulation psi -> e^{im.x} psi, i.e. an index shift of the coefficients.

template <int D>
SpectralField<D> modulate(const SpectralField<D>& x, const Mode<D>& m) {
    SpectralField<D> out(x.cutoff());
    for (const auto& [k, v] : x.coefficients()) out.set(k + m, v);  // throws past cutoff
    return out;
}

// ---------------------------------------------------------------------------
// Distance of psi from the plane-wave orbit through mode m: demodulate by m,
// drop the zero mode, and take the H^s norm of what is left.

template <int D>
double orbital_distance(const SpectralField<D>& psi, const Mode<D>& m, double s) {
    check_sobolev_exponent(s);
    double acc = 0.0;
    for (const auto& [k, v] : psi.coefficients()) {
        if (k == m) continue;
        acc += std::norm(v) * std::pow(1.0 + double((k - m).norm2()), s);
    }
    return std::sqrt(acc);
}

// min over phi of || e^{-i phi} a - b ||_s.  Expanding the square gives
// ||a||^2 + ||b||^2 - 2 Re(e^{-i phi} <a,b>_s), minimized at |<a,b>_s|.
template <int D>
double phase_optimized_distance(const SpectralField<D>& a, const SpectralField<D>& b, double s) {
    double na2 = sobolev_norm(a, s), nb2 = sobolev_norm(b, s);
    double v = na2 * na2 + nb2 * nb2 - 2.0 * std::abs(sobolev_inner(a, b, s));
    return std::sqrt(std::max(0.0, v));
}

// ---------------------------------------------------------------------------
// JSON serialization: {d, N_lat, entries: [[n...], re, im]} ordered by mode.

template <int D>
nlohmann::json to_json(const SpectralField<D>& x) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [m, v] : x.coefficients()) {
        nlohmann::json idx = nlohmann::json::array();
        for (int c : m.n) idx.push_back(c);
        entries.push_back(nlohmann::json::array({idx, v.real(), v.imag()}));
    }
    return nlohmann::json{{"d", D}, {"N_lat", x.cutoff()}, {"entries", entries}};
}

template <int D>
SpectralField<D> field_from_json(const nlohmann::json& j) {
    if (j.at("d").get<int>() != D) throw ConfigError("field_from_json: dimension mismatch");
    SpectralField<D> x(j.at("N_lat").get<int>());
    for (const auto& e : j.at("entries")) {
        Mode<D> m;
        const auto& idx = e.at(0);
        if (idx.size() != D) throw ConfigError("field_from_json: bad index length");
        for (int i = 0; i < D; ++i) m.n[i] = idx.at(i).get<int>();
        x.set(m, cplx(e.at(1).get<double>(), e.at(2).get<double>()));
    }
    return x;
}

}  // namespace nlslab

#pragma once

// Zero-mode reduction and diagonalization: the symplectic polar reduction of
// u_0, the Taylor expansion of the reduced Hamiltonian in (v, vbar), the
// Bogoliubov change diagonalizing its quadratic part, and the shell
// frequency table Omega(mu) = sqrt(mu (mu + 2 p L^p)).
//
// The expansion is generated symbolically from the original Hamiltonian
//   sum |k|^2 |u_k|^2 + 1/(p+1) sum_{momentum} u...ubar...
// by substituting u_0 = sqrt(L - sum |v_k|^2), u_k = v_k and binomially
// expanding the root.  Grouping by how many u-factors are nonzero gives
//   1/(p+1) sum_{a,b} C(p+1,a) C(p+1,b) (L-P)^{(2(p+1)-a-b)/2} S_{a,b},
// with P = sum |v_k|^2 and S_{a,b} the momentum-constrained free sums.  All
// coefficients are rational multiples of half-integer powers of L.

#include <vector>

#include "nlslab/poly.hpp"
#include "nlslab/spectral_field.hpp"

namespace nlslab {

// ---------------------------------------------------------------------------
// Symplectic reduction of the zero mode.

template <int D>
struct ReducedState {
    double L = 0.0;    // total mass
    double nu0 = 0.0;  // zero-mode phase
    SpectralField<D> v;
};

template <int D>
ReducedState<D> reduce(const SpectralField<D>& u) {
    cplx u0 = u.at(Mode<D>::zero());
    if (u0 == cplx{0.0, 0.0}) throw ConfigError("reduce: zero mode vanishes, phase undefined");
    ReducedState<D> r;
    r.L = u.mass();
    r.nu0 = std::arg(u0);
    r.v = SpectralField<D>(u.cutoff());
    cplx rot = std::exp(cplx(0.0, -r.nu0));
    for (const auto& [k, val] : u.coefficients())
        if (!k.is_zero()) r.v.set(k, val * rot);
    return r;
}

template <int D>
SpectralField<D> inverse_reduce(const ReducedState<D>& r) {
    double rest = r.L - r.v.mass();
    if (rest < 0.0) throw ConfigError("inverse_reduce: sum |v_k|^2 exceeds L");
    SpectralField<D> u(r.v.cutoff());
    cplx rot = std::exp(cplx(0.0, r.nu0));
    u.set(Mode<D>::zero(), std::sqrt(rest) * rot);
    for (const auto& [k, val] : r.v.coefficients()) u.set(k, val * rot);
    return u;
}

// ---------------------------------------------------------------------------
// Frequencies.

inline double omega_value(ShellKey mu, int p, double L) {
    return std::sqrt(double(mu) * (double(mu) + 2.0 * p * std::pow(L, p)));
}

struct FrequencyTable {
    int p = 1;
    double L = 0.0;
    std::map<ShellKey, double> entries;

    double omega(ShellKey mu) const {
        auto it = entries.find(mu);
        if (it == entries.end())
            throw ConfigError("FrequencyTable: shell " + std::to_string(mu) + " beyond table");
        return it->second;
    }
    ShellKey mu_max() const { return entries.empty() ? 0 : entries.rbegin()->first; }
};

inline FrequencyTable frequencies(int p, double L, ShellKey mu_max) {
    if (!(L > 0.0)) throw ConfigError("frequencies: L must be positive");
    if (1.0 + 2.0 * p * std::pow(L, p) <= 0.0)
        throw ConfigError("frequencies: 1 + 2 p L^p <= 0, non-real frequency");
    FrequencyTable t{p, L, {}};
    for (ShellKey mu = 1; mu <= mu_max; ++mu) t.entries[mu] = omega_value(mu, p, L);
    return t;
}

// Exact counterpart used by the exact normal-form pipeline.
struct ExactFrequencyTable {
    int p = 1;
    Rational L{0};

    Radical omega(ShellKey mu) const {
        Rational Lp = 1;
        for (int i = 0; i < p; ++i) Lp *= L;
        return Radical::sqrt_rational(Rational(mu) * (Rational(mu) + 2 * Rational(p) * Lp));
    }
    FrequencyTable table(ShellKey mu_max) const { return frequencies(p, to_double(L), mu_max); }
};

// ---------------------------------------------------------------------------
// Taylor expansion of the reduced Hamiltonian.

namespace reduction_detail {

inline Rational half_binomial(int twice_gamma, int j) {
    // binom(gamma, j) with gamma = twice_gamma/2
    Rational r = 1;
    for (int i = 0; i < j; ++i) r *= Rational(twice_gamma - 2 * i, 2);
    for (int i = 1; i <= j; ++i) r /= i;
    return r;
}

inline Rational factorial(int n) {
    Rational r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

template <int D>
Rational multiset_multiplicity(const MultiIndex<D>& mi) {
    Rational r = factorial(mi.degree());
    for (const auto& [m, p] : mi.factors()) r /= factorial(p);
    return r;
}

// all multisets of the given size over the mode set, bucketed by momentum
template <int D>
std::map<Mode<D>, std::vector<MultiIndex<D>>> multisets_by_momentum(
    const std::vector<Mode<D>>& modes, int size) {
    std::map<Mode<D>, std::vector<MultiIndex<D>>> buckets;
    std::vector<int> counts(modes.size(), 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (left == 0 || i == modes.size()) {
            if (left != 0) return;
            MultiIndex<D> mi;
            for (std::size_t k = 0; k < modes.size(); ++k)
                if (counts[k]) mi = mi.bump(modes[k], counts[k]);
            buckets[mi.weighted_mode_sum()].push_back(mi);
            return;
        }
        for (int take = 0; take <= left; ++take) {
            counts[i] = take;
            rec(i + 1, left - take);
        }
        counts[i] = 0;
    };
    rec(0, size);
    return buckets;
}

template <class S>
S l_power(const Rational& L, int twice_exponent);

template <>
inline cplx l_power<cplx>(const Rational& L, int twice_exponent) {
    return {std::pow(to_double(L), 0.5 * twice_exponent), 0.0};
}

template <>
inline Radical l_power<Radical>(const Rational& L, int twice_exponent) {
    Radical sqrtL = Radical::sqrt_rational(L);
    Radical r(1);
    for (int i = 0; i < std::abs(twice_exponent); ++i) r = r * sqrtL;
    if (twice_exponent < 0) r = Radical(1) / r;
    return r;
}

template <class S>
S from_rational(const Rational& r) {
    if constexpr (std::is_same_v<S, Radical>)
        return Radical(RatC(r));
    else
        return cplx(to_double(r), 0.0);
}

}  // namespace reduction_detail

template <class S, int D>
PolyHamiltonian<S, D> expand_reduced_hamiltonian(int p, const Rational& L,
                                                 const std::vector<Mode<D>>& mode_set,
                                                 int max_degree) {
    namespace rd = reduction_detail;
    if (max_degree < 2) throw ConfigError("expand_reduced_hamiltonian: max_degree must be >= 2");
    if (max_degree > kDefaultDegreeBudget + 2)
        throw ConfigError("expand_reduced_hamiltonian: degree beyond symbolic budget");
    for (const auto& m : mode_set)
        if (m.is_zero()) throw ConfigError("expand_reduced_hamiltonian: mode set contains 0");

    PolyHamiltonian<S, D> H;

    // kinetic part
    for (const auto& k : mode_set) {
        auto e = MultiIndex<D>::single(k);
        H.add_term({e, e}, rd::from_rational<S>(Rational(k.norm2())));
    }

    // powers of P = sum |v_k|^2 up to the degree cap, P^j as multi-index pairs
    const int jmax = max_degree / 2;
    std::vector<std::vector<std::pair<MultiIndex<D>, Rational>>> ppow(jmax + 1);
    ppow[0] = {{MultiIndex<D>{}, Rational(1)}};
    for (int j = 1; j <= jmax; ++j) {
        auto buckets = rd::multisets_by_momentum(mode_set, j);
        for (const auto& [mom, list] : buckets)
            for (const auto& eta : list) ppow[j].push_back({eta, rd::multiset_multiplicity(eta)});
    }

    // interaction: (a,b) blocks with binomially expanded (L-P)^{gamma}
    Rational inv_p1(1, p + 1);
    std::vector<std::map<Mode<D>, std::vector<MultiIndex<D>>>> msets(p + 2);
    for (int a = 0; a <= p + 1; ++a) msets[a] = rd::multisets_by_momentum(mode_set, a);

    auto binom_int = [](int n, int k) {
        Rational r = 1;
        for (int i = 0; i < k; ++i) r = r * Rational(n - i) / Rational(i + 1);
        return r;
    };

    for (int a = 0; a <= p + 1; ++a) {
        for (int b = 0; b <= p + 1; ++b) {
            if (a + b > max_degree) continue;
            Rational cab = inv_p1 * binom_int(p + 1, a) * binom_int(p + 1, b);
            int twice_gamma = 2 * (p + 1) - a - b;
            for (const auto& [mom, alphas] : msets[a]) {
                auto it = msets[b].find(mom);
                if (it == msets[b].end()) continue;
                for (const auto& alpha : alphas) {
                    Rational ma = rd::multiset_multiplicity(alpha);
                    for (const auto& beta : it->second) {
                        Rational base = cab * ma * rd::multiset_multiplicity(beta);
                        for (int j = 0; 2 * j + a + b <= max_degree; ++j) {
                            Rational bin = rd::half_binomial(twice_gamma, j);
                            if (bin == 0) break;  // integer gamma: series terminates
                            Rational coeff = base * bin * (j % 2 ? -1 : 1);
                            S lpow = rd::l_power<S>(L, twice_gamma - 2 * j);
                            for (const auto& [eta, meta] : ppow[j]) {
                                int deg = a + b + 2 * j;
                                if (deg < 2 || deg > max_degree) continue;
                                HamKey<D> key{alpha + eta, beta + eta};
                                H.add_term(key, rd::from_rational<S>(coeff * meta) * lpow);
                            }
                        }
                    }
                }
            }
        }
    }
    return H;
}

template <int D>
std::vector<Mode<D>> modes_within(int n_trunc) {
    std::vector<Mode<D>> out;
    std::array<int, D> c{};
    for (int i = 0; i < D; ++i) c[i] = -n_trunc;
    while (true) {
        Mode<D> m(c);
        if (!m.is_zero() && m.norm2() <= ShellKey(n_trunc) * n_trunc) out.push_back(m);
        int ax = D - 1;
        while (ax >= 0 && ++c[ax] > n_trunc) c[ax--] = -n_trunc;
        if (ax < 0) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Bogoliubov change.  Per shell mu the hyperbolic rotation
//   a = cosh th, b = sinh th,  tanh 2 th = -p L^p / (mu + p L^p),
// normalized by a^2 - b^2 = 1, kills the anomalous x_k x_{-k} couplings; the
// Hamiltonian substitution reads v_k = a x_k + b xbar_{-k} and the data map
// is x_k = a v_k - b vbar_{-k}.

struct BogoliubovCoeffs {
    double a = 1.0;
    double b = 0.0;
};

inline BogoliubovCoeffs bogoliubov(ShellKey mu, int p, double L) {
    if (mu < 1) throw ConfigError("bogoliubov: mu must be >= 1");
    double lp = std::pow(L, p);
    double kappa = double(mu) + p * lp;
    if (double(mu) + 2.0 * p * lp <= 0.0)
        throw ConfigError("bogoliubov: mu + 2 p L^p <= 0, frequency gap closes");
    if (L == 0.0) return {1.0, 0.0};
    double th = 0.5 * std::atanh(-p * lp / kappa);
    return {std::cosh(th), std::sinh(th)};
}

// Substitute v_k = a x_k + b xbar_{-k} into a numeric Hamiltonian in v.
template <int D>
PolyHamiltonian<cplx, D> apply_bogoliubov(const PolyHamiltonian<cplx, D>& H, int p, double L) {
    std::map<ShellKey, BogoliubovCoeffs> cache;
    auto ab = [&](ShellKey mu) -> const BogoliubovCoeffs& {
        auto it = cache.find(mu);
        if (it == cache.end()) it = cache.emplace(mu, bogoliubov(mu, p, L)).first;
        return it->second;
    };

    PolyHamiltonian<cplx, D> out;
    // expand each term factor by factor: v_k -> a x_k + b xbar_{-k},
    // vbar_k -> a xbar_k + b x_{-k}
    for (const auto& [key, c] : H.terms()) {
        struct Factor {
            Mode<D> mode;
            bool bar;
        };
        std::vector<Factor> factors;
        for (const auto& [m, pw] : key.alpha.factors())
            for (int i = 0; i < pw; ++i) factors.push_back({m, false});
        for (const auto& [m, pw] : key.beta.factors())
            for (int i = 0; i < pw; ++i) factors.push_back({m, true});

        std::size_t combos = std::size_t(1) << factors.size();
        for (std::size_t mask = 0; mask < combos; ++mask) {
            cplx coeff = c;
            MultiIndex<D> alpha, beta;
            for (std::size_t i = 0; i < factors.size(); ++i) {
                const auto& f = factors[i];
                const auto& co = ab(f.mode.shell());
                bool second = mask & (std::size_t(1) << i);
                coeff *= second ? co.b : co.a;
                Mode<D> target = second ? -f.mode : f.mode;
                bool bar = f.bar ^ second;
                if (bar)
                    beta = beta.bump(target, 1);
                else
                    alpha = alpha.bump(target, 1);
            }
            out.add_term({alpha, beta}, coeff);
        }
    }
    // conjugate pairs are assembled through different multiplication orders;
    // symmetrizing restores the exact reality pairing lost to rounding
    PolyHamiltonian<cplx, D> sym;
    for (const auto& [k, c] : out.terms()) {
        cplx cc = out.coeff(k.conjugate());
        sym.add_term(k, 0.5 * (c + std::conj(cc)));
    }
    return sym;
}

// Map coefficient data between v and normal coordinates x (numeric).
template <int D>
SpectralField<D> to_normal_coordinates(const SpectralField<D>& v, int p, double L) {
    SpectralField<D> x(v.cutoff());
    for (const auto& [k, val] : v.coefficients()) {
        auto co = bogoliubov(k.shell(), p, L);
        x.add(k, co.a * val);
        x.add(-k, -co.b * std::conj(val));
    }
    return x;
}

template <int D>
SpectralField<D> from_normal_coordinates(const SpectralField<D>& x, int p, double L) {
    SpectralField<D> v(x.cutoff());
    for (const auto& [k, val] : x.coefficients()) {
        auto co = bogoliubov(k.shell(), p, L);
        v.add(k, co.a * val);
        v.add(-k, co.b * std::conj(val));
    }
    return v;
}

// ---------------------------------------------------------------------------
// Exact conjugation of the quadratic part.  Each quadratic term couples only
// the pair {k,-k}, so the transformed coefficients involve a^2, b^2 and ab,
// all of which live in Q(Omega_mu):
//   a^2 = (kappa+Omega)/(2 Omega), b^2 = (kappa-Omega)/(2 Omega),
//   ab = -p L^p/(2 Omega).
// Returns the transformed quadratic Hamiltonian with exact coefficients.

template <int D>
PolyHamiltonian<Radical, D> conjugate_quadratic_exact(const PolyHamiltonian<Radical, D>& H2,
                                                      int p, const Rational& L) {
    Rational Lp = 1;
    for (int i = 0; i < p; ++i) Lp *= L;

    struct ShellData {
        Radical a2, b2, ab;
    };
    std::map<ShellKey, ShellData> cache;
    auto data = [&](ShellKey mu) -> const ShellData& {
        auto it = cache.find(mu);
        if (it == cache.end()) {
            Radical omega = Radical::sqrt_rational(Rational(mu) * (Rational(mu) + 2 * Rational(p) * Lp));
            Radical kappa(RatC(Rational(mu) + Rational(p) * Lp));
            Radical two_omega = Radical(2) * omega;
            ShellData sd{(kappa + omega) / two_omega, (kappa - omega) / two_omega,
                         Radical(RatC(-Rational(p) * Lp)) / two_omega};
            it = cache.emplace(mu, sd).first;
        }
        return it->second;
    };

    PolyHamiltonian<Radical, D> out;
    for (const auto& [key, c] : H2.terms()) {
        if (key.degree() != 2) throw ConfigError("conjugate_quadratic_exact: non-quadratic term");
        struct Factor {
            Mode<D> mode;
            bool bar;
        };
        std::vector<Factor> f;
        for (const auto& [m, pw] : key.alpha.factors())
            for (int i = 0; i < pw; ++i) f.push_back({m, false});
        for (const auto& [m, pw] : key.beta.factors())
            for (int i = 0; i < pw; ++i) f.push_back({m, true});
        if (f[0].mode.shell() != f[1].mode.shell())
            throw ConfigError("conjugate_quadratic_exact: cross-shell quadratic term");
        const auto& sd = data(f[0].mode.shell());

        for (int m0 = 0; m0 < 2; ++m0) {
            for (int m1 = 0; m1 < 2; ++m1) {
                Radical coeff = c * (m0 == 0 ? (m1 == 0 ? sd.a2 : sd.ab)
                                             : (m1 == 0 ? sd.ab : sd.b2));
                MultiIndex<D> alpha, beta;
                auto place = [&](const Factor& fac, bool second) {
                    Mode<D> t = second ? -fac.mode : fac.mode;
                    if (fac.bar ^ second)
                        beta = beta.bump(t, 1);
                    else
                        alpha = alpha.bump(t, 1);
                };
                place(f[0], m0 != 0);
                place(f[1], m1 != 0);
                out.add_term({alpha, beta}, coeff);
            }
        }
    }
    return out;
}

}  // namespace nlslab

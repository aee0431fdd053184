#pragma once

// The normal-form machine: resonance classification through the shell
// lambda-vector, the homological equation, Lie-series transformations, the
// degree-by-degree normalization loop, decoupled shell matrices, and the
// integrator for the truncated system.
//
// Degree bookkeeping.  Vector-field degree K and Hamiltonian degree K+1
// describe the same block.  normalize treats field degrees 2..ell+2
// (generators are Hamiltonians of degree >= 3), so the resonant part
// R^(ell) has field degree at most ell+2 and the tracked remainder starts
// at field degree ell+3, matching the r^{ell+3/2} remainder bound and the
// growth-rate measurements downstream.
//
// Resonance is decided structurally: lambda_q = sum_{|i|^2=q} alpha_i -
// beta_i (minus the target contribution) and a term is resonant iff
// lambda = 0.  Divisors are only evaluated numerically for diagnostics and
// the near-resonance guard; in exact mode the solver additionally checks
// that the divisor vanishes iff lambda does.

#include <functional>
#include <sstream>

#include "nlslab/nls.hpp"
#include "nlslab/poly.hpp"
#include "nlslab/reduction.hpp"

namespace nlslab {

// ---------------------------------------------------------------------------
// Lambda vectors and classification.

template <int D>
std::map<ShellKey, int> lambda_vector(const MultiIndex<D>& alpha, const MultiIndex<D>& beta) {
    std::map<ShellKey, int> l;
    for (const auto& [m, p] : alpha.factors()) l[m.shell()] += p;
    for (const auto& [m, p] : beta.factors()) l[m.shell()] -= p;
    std::erase_if(l, [](const auto& kv) { return kv.second == 0; });
    return l;
}

template <int D>
std::map<ShellKey, int> lambda_vector(const FieldKey<D>& k) {
    std::map<ShellKey, int> l;
    for (const auto& [m, p] : k.alpha.factors()) l[m.shell()] += p;
    for (const auto& [m, p] : k.beta.factors()) l[m.shell()] -= p;
    l[k.target.shell()] += k.conj ? +1 : -1;
    std::erase_if(l, [](const auto& kv) { return kv.second == 0; });
    return l;
}

struct ResonanceVerdict {
    bool resonant = false;
    std::map<ShellKey, int> lambda;
    double divisor = 0.0;  // sum lambda_q Omega(q); exactly 0 when resonant
};

inline std::string lambda_str(const std::map<ShellKey, int>& l) {
    std::ostringstream os;
    for (const auto& [q, v] : l) os << " mu=" << q << ":" << v;
    return l.empty() ? std::string(" (empty)") : os.str();
}

template <int D>
ResonanceVerdict classify(const FieldKey<D>& term, const FrequencyTable& freq) {
    if (!term.momentum().is_zero())
        throw ConfigError("classify: term violates conservation of momentum");
    // every touched shell must be in the table, resonant or not
    for (const auto& [m, p] : term.alpha.factors()) freq.omega(m.shell());
    for (const auto& [m, p] : term.beta.factors()) freq.omega(m.shell());
    freq.omega(term.target.shell());
    ResonanceVerdict v;
    v.lambda = lambda_vector(term);
    v.resonant = v.lambda.empty();
    for (const auto& [q, lam] : v.lambda) v.divisor += lam * freq.omega(q);
    return v;
}

// ---------------------------------------------------------------------------
// Homological equation at one degree.  For a Hamiltonian block f the
// generator is chi = sum i f_{alpha,beta} / delta on nonresonant keys,
// delta = Omega.(alpha - beta), which makes {H_2, chi} cancel those keys;
// resonant keys are kept verbatim.

template <class S, int D>
struct HomologicalSolution {
    PolyHamiltonian<S, D> generator;       // real Hamiltonian chi
    PolyVectorField<S, D> resonant_part;   // R_{K0}
};

namespace birkhoff_detail {

template <class S, class FT, int D>
S scalar_divisor(const std::map<ShellKey, int>& lambda, const FT& freq) {
    S d = ScalarOps<S>::zero();
    for (const auto& [q, lam] : lambda) d = d + ScalarOps<S>::from_ratio(lam, 1) * freq.omega(q);
    return d;
}

}  // namespace birkhoff_detail

template <class S, int D, class FT>
HomologicalSolution<S, D> solve_homological_ham(const PolyHamiltonian<S, D>& f, const FT& freq,
                                                double divisor_floor = 0.0) {
    using Ops = ScalarOps<S>;
    HomologicalSolution<S, D> sol;
    PolyHamiltonian<S, D> resonant;
    for (const auto& [k, c] : f.terms()) {
        if (!k.momentum().is_zero())
            throw ConfigError("solve_homological: non-momentum-conserving term");
        auto lambda = lambda_vector(k.alpha, k.beta);
        S delta = birkhoff_detail::scalar_divisor<S, FT, D>(lambda, freq);
        bool structurally_resonant = lambda.empty();
        if (Ops::is_zero(delta) != structurally_resonant)
            throw NumericalError("solve_homological: divisor vanishes off the kernel; "
                                 "L is resonant for lambda" + lambda_str(lambda));
        if (structurally_resonant) {
            resonant.add_term(k, c);
            continue;
        }
        double dnum = Ops::to_cplx(delta).real();
        if (divisor_floor > 0.0 && std::abs(dnum) < divisor_floor)
            throw NearResonanceError(
                "small divisor below floor at lambda" + lambda_str(lambda), dnum, divisor_floor);
        sol.generator.add_term(k, Ops::mul_i(c) / delta);
    }
    sol.resonant_part = vector_field_of(resonant);
    return sol;
}

// Field-level entry point: Y must be a homogeneous momentum-conserving
// Hamiltonian field of degree >= 2.
template <class S, int D, class FT>
HomologicalSolution<S, D> solve_homological(const PolyVectorField<S, D>& Y, const FT& freq,
                                            double divisor_floor = 0.0) {
    if (!Y.is_homogeneous() || Y.min_degree() < 2)
        throw ConfigError("solve_homological: Y must be homogeneous of degree >= 2");
    return solve_homological_ham(hamiltonian_of(Y), freq, divisor_floor);
}

// Residual of the per-term identity R - (Omega.(alpha-beta) -+ Omega_m) X = Y
// in the generator-coefficient normalization X = -Y/delta (so X = i X_chi).
// Returns the largest absolute residual coefficient; exactly 0.0 when every
// cancellation is exact in S.
template <class S, int D, class FT>
double homological_residual(const PolyVectorField<S, D>& Y, const HomologicalSolution<S, D>& sol,
                            const FT& freq) {
    using Ops = ScalarOps<S>;
    PolyVectorField<S, D> residual = sol.resonant_part;
    auto Xchi = vector_field_of(sol.generator);
    for (const auto& [k, c] : Xchi.terms()) {
        S xpaper = Ops::mul_i(c);
        S delta = birkhoff_detail::scalar_divisor<S, FT, D>(lambda_vector(k), freq);
        residual.add_term(k, -(delta * xpaper));
    }
    residual -= Y;
    double worst = 0.0;
    for (const auto& [k, c] : residual.terms())
        worst = std::max(worst, std::abs(Ops::to_cplx(c)));
    return worst;
}

// ---------------------------------------------------------------------------
// Lie transforms: the pullback of fields (and Hamiltonians) under the time-1
// flow of X_chi, as a terminating series under a degree cap.

template <class S, int D>
PolyHamiltonian<S, D> lie_transform_hamiltonian(const PolyHamiltonian<S, D>& F,
                                                const PolyHamiltonian<S, D>& chi,
                                                int degree_cap) {
    using Ops = ScalarOps<S>;
    if (!chi.empty() && chi.max_degree() < 3)
        throw ConfigError("lie_transform: generator must have degree >= 3");
    if (degree_cap < F.max_degree()) throw ConfigError("lie_transform: cap below input degree");
    PolyHamiltonian<S, D> out = F, term = F;
    for (int k = 1; !term.empty(); ++k) {
        if (k > 64) throw NumericalError("lie_transform: series failed to terminate");
        term = poisson_bracket(term, chi, degree_cap, /*truncate=*/true);
        term *= Ops::from_ratio(1, k);
        out += term;
    }
    return out;
}

template <class S, int D>
PolyVectorField<S, D> lie_transform(const PolyVectorField<S, D>& X,
                                    const PolyHamiltonian<S, D>& chi, int degree_cap) {
    using Ops = ScalarOps<S>;
    if (!chi.empty() && chi.max_degree() < 3)
        throw ConfigError("lie_transform: generator must have degree >= 3");
    if (degree_cap < X.max_degree()) throw ConfigError("lie_transform: cap below input degree");
    auto Xchi = vector_field_of(chi);
    PolyVectorField<S, D> out = X, term = X;
    for (int k = 1; !term.empty(); ++k) {
        if (k > 64) throw NumericalError("lie_transform: series failed to terminate");
        term = lie_bracket(Xchi, term, degree_cap, /*truncate=*/true);
        term *= Ops::from_ratio(1, k);
        out += term;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The normalization loop.

struct NormalFormOptions {
    int ell = 1;
    int n_trunc = 2;
    int degree_cap = 0;         // tracked field degree; 0 -> ell + 3
    double divisor_floor = 0.0; // near-resonance guard, 0 disables
};

struct DegreeCensus {
    int resonant = 0;
    int nonresonant = 0;
};

template <class S, int D>
struct NormalFormResult {
    PolyVectorField<S, D> resonant;   // field degrees <= ell+2, all lambda = 0
    PolyVectorField<S, D> remainder;  // field degrees ell+3 .. cap
    std::vector<PolyHamiltonian<S, D>> generators;
    std::map<int, DegreeCensus> census;  // field degree -> counts before that step
    int ell = 0;
    int n_trunc = 0;
    int field_cap = 0;
};

// H_nl: nonlinear Hamiltonian blocks (degree >= 3) in diagonalized
// coordinates, supported on modes with |n|^2 <= n_trunc^2.
template <class S, int D, class FT>
NormalFormResult<S, D> normalize(const PolyHamiltonian<S, D>& H_nl, const FT& freq,
                                 const NormalFormOptions& opt) {
    using Ops = ScalarOps<S>;
    if (opt.ell < 0) throw ConfigError("normalize: ell must be >= 0");
    const int field_cap = opt.degree_cap > 0 ? opt.degree_cap : opt.ell + 3;
    if (field_cap < opt.ell + 2) throw ConfigError("normalize: cap below ell + 2");
    const int ham_cap = field_cap + 1;

    NormalFormResult<S, D> res;
    res.ell = opt.ell;
    res.n_trunc = opt.n_trunc;
    res.field_cap = field_cap;

    auto modes = modes_within<D>(opt.n_trunc);
    for (const auto& [k, c] : H_nl.terms()) {
        if (k.degree() < 3) throw ConfigError("normalize: input must not contain degree <= 2");
        if (k.alpha.max_mode_abs() > opt.n_trunc || k.beta.max_mode_abs() > opt.n_trunc)
            throw ConfigError("normalize: term outside the mode truncation");
    }

    PolyHamiltonian<S, D> H2;
    for (const auto& m : modes) {
        auto e = MultiIndex<D>::single(m);
        H2.add_term({e, e}, freq.omega(m.shell()));
    }

    PolyHamiltonian<S, D> work = H_nl.truncate_degree(ham_cap);
    for (int k_field = 2; k_field <= opt.ell + 2; ++k_field) {
        auto block = work.homogeneous_part(k_field + 1);
        DegreeCensus census;
        for (const auto& [k, c] : block.terms()) {
            bool r = lambda_vector(k.alpha, k.beta).empty();
            (r ? census.resonant : census.nonresonant)++;
        }
        res.census[k_field] = census;
        auto sol = solve_homological_ham(block, freq, opt.divisor_floor);
        res.generators.push_back(sol.generator);
        if (sol.generator.empty()) continue;
        auto full = H2;
        full += work;
        full = lie_transform_hamiltonian(full, sol.generator, ham_cap);
        full -= H2;
        work = full;
    }

    // everything of Hamiltonian degree <= ell+3 must now be resonant
    for (const auto& [k, c] : work.terms()) {
        if (k.degree() <= opt.ell + 3 && !lambda_vector(k.alpha, k.beta).empty())
            throw NumericalError("normalize: nonresonant term survived below the cap");
    }
    res.resonant = vector_field_of(work.truncate_degree(opt.ell + 3));
    PolyHamiltonian<S, D> tail;
    for (const auto& [k, c] : work.terms())
        if (k.degree() > opt.ell + 3) tail.add_term(k, c);
    res.remainder = vector_field_of(tail);
    return res;
}

// Convenience: expansion -> Bogoliubov -> Hamiltonian blocks, numeric path.
template <int D>
PolyHamiltonian<cplx, D> diagonalized_nonlinear_hamiltonian(int p, double L, int n_trunc,
                                                            int max_ham_degree) {
    auto modes = modes_within<D>(n_trunc);
    auto Hv = expand_reduced_hamiltonian<cplx, D>(p, rational_of(L), modes, max_ham_degree);
    auto Hx = apply_bogoliubov(Hv, p, L);
    PolyHamiltonian<cplx, D> out;
    for (const auto& [k, c] : Hx.terms()) {
        if (k.degree() >= 3) out.add_term(k, c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shell matrices.  A resonant field decouples as i d/dt (shell) = M_mu
// (shell).  Every resonant term has at least one alpha-factor in the
// target's shell; its value is distributed over those columns with weights
// alpha_i / (total alpha mass in the shell), which reproduces the dynamics
// exactly and is Hermitian by the reality pairing.

template <int D>
struct ShellMatrix {
    ShellKey mu = 0;
    std::vector<Mode<D>> modes;                      // canonical order
    std::vector<std::vector<cplx>> entries;          // evaluated at the point
    double hermiticity_defect = 0.0;                 // max |M - M^dagger|
};

template <int D>
std::vector<ShellMatrix<D>> shell_matrices(const PolyVectorField<cplx, D>& R,
                                           const FrequencyTable& freq,
                                           const std::vector<Mode<D>>& modes,
                                           const std::map<Mode<D>, cplx>& y,
                                           double tol = 1e-12) {
    std::map<ShellKey, std::vector<Mode<D>>> shells;
    for (const auto& m : modes) shells[m.shell()].push_back(m);
    std::map<ShellKey, std::map<std::pair<int, int>, cplx>> acc;
    auto index_in = [&](ShellKey mu, const Mode<D>& m) {
        const auto& v = shells.at(mu);
        return int(std::lower_bound(v.begin(), v.end(), m) - v.begin());
    };

    auto value_of = [&](const Mode<D>& m) {
        auto it = y.find(m);
        return it == y.end() ? cplx{0.0, 0.0} : it->second;
    };

    for (const auto& [k, c] : R.terms()) {
        if (k.conj) continue;
        if (!lambda_vector(k).empty())
            throw ConfigError("shell_matrices: field is not resonant");
        ShellKey mu = k.target.shell();
        int row = index_in(mu, k.target);
        int shell_mass = 0;
        for (const auto& [m, p] : k.alpha.factors())
            if (m.shell() == mu) shell_mass += p;
        if (shell_mass == 0)
            throw NumericalError("shell_matrices: resonant term with no in-shell alpha factor");
        cplx iform = cplx(0.0, 1.0) * c;  // i dy/dt = i * (true field)
        for (const auto& [m, p] : k.alpha.factors()) {
            if (m.shell() != mu) continue;
            // monomial with one y_m factor removed
            cplx mono = iform * (double(p) / double(shell_mass));
            for (const auto& [mm, pp] : k.alpha.factors()) {
                int reps = (mm == m) ? pp - 1 : pp;
                for (int i = 0; i < reps; ++i) mono *= value_of(mm);
            }
            for (const auto& [mm, pp] : k.beta.factors())
                for (int i = 0; i < pp; ++i) mono *= std::conj(value_of(mm));
            acc[mu][{row, index_in(mu, m)}] += mono;
        }
    }

    std::vector<ShellMatrix<D>> out;
    for (const auto& [mu, mlist] : shells) {
        ShellMatrix<D> sm;
        sm.mu = mu;
        sm.modes = mlist;
        int k = int(mlist.size());
        sm.entries.assign(k, std::vector<cplx>(k, cplx{0.0, 0.0}));
        for (int i = 0; i < k; ++i) sm.entries[i][i] = freq.omega(mu);
        auto it = acc.find(mu);
        if (it != acc.end())
            for (const auto& [ij, v] : it->second) sm.entries[ij.first][ij.second] += v;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                sm.hermiticity_defect = std::max(
                    sm.hermiticity_defect,
                    std::abs(sm.entries[i][j] - std::conj(sm.entries[j][i])));
        if (sm.hermiticity_defect > tol)
            throw NumericalError("shell_matrices: non-Hermitian evaluation (defect " +
                                 std::to_string(sm.hermiticity_defect) +
                                 "), resonance classification falsified");
        out.push_back(std::move(sm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Truncated flow  i dy/dt = omega y + R(y) (+ remainder), integrated with
// classical fixed-step RK4, by default in the rotating frame z = e^{i om t} y
// so the linear flow is exact and super-action drift measures only the
// nonlinear terms.

template <int D>
struct CompiledField {
    struct Term {
        cplx coeff;
        std::vector<std::pair<int, bool>> factors;  // (slot, conjugated)
        int target;
    };
    std::vector<Mode<D>> modes;
    std::vector<Term> terms;

    static CompiledField compile(const PolyVectorField<cplx, D>& X,
                                 const std::vector<Mode<D>>& modes) {
        CompiledField cf;
        cf.modes = modes;
        auto slot = [&](const Mode<D>& m) {
            auto it = std::lower_bound(cf.modes.begin(), cf.modes.end(), m);
            if (it == cf.modes.end() || !(*it == m))
                throw ConfigError("CompiledField: mode outside state layout");
            return int(it - cf.modes.begin());
        };
        for (const auto& [k, c] : X.terms()) {
            if (k.conj) continue;  // ybar components follow by conjugation
            Term t;
            t.coeff = c;
            t.target = slot(k.target);
            for (const auto& [m, p] : k.alpha.factors())
                for (int i = 0; i < p; ++i) t.factors.push_back({slot(m), false});
            for (const auto& [m, p] : k.beta.factors())
                for (int i = 0; i < p; ++i) t.factors.push_back({slot(m), true});
            cf.terms.push_back(std::move(t));
        }
        return cf;
    }

    void eval(const std::vector<cplx>& y, std::vector<cplx>& out) const {
        std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
        for (const auto& t : terms) {
            cplx v = t.coeff;
            for (const auto& [slot, conj] : t.factors) v *= conj ? std::conj(y[slot]) : y[slot];
            out[t.target] += v;
        }
    }
};

struct TruncatedFlowOptions {
    double T = 10.0;
    double dt = 1e-2;
    double s = 6.0;               // Sobolev exponent for the recorded norm
    double sample_interval = 1.0;
    bool include_remainder = false;
    bool rotating_frame = true;
};

template <int D>
StabilityRecord integrate_truncated(const NormalFormResult<cplx, D>& nf,
                                    const FrequencyTable& freq, const SpectralField<D>& y0,
                                    const TruncatedFlowOptions& opt) {
    auto modes = modes_within<D>(nf.n_trunc);
    PolyVectorField<cplx, D> X = nf.resonant;
    if (opt.include_remainder) X += nf.remainder;
    if (!X.satisfies_reality())
        throw NumericalError("integrate_truncated: field violates the reality pairing");
    auto cf = CompiledField<D>::compile(X, modes);

    const int n = int(modes.size());
    std::vector<cplx> y(n, cplx{0.0, 0.0});
    for (const auto& [m, v] : y0.coefficients()) {
        auto it = std::lower_bound(modes.begin(), modes.end(), m);
        if (it == modes.end() || !(*it == m))
            throw ConfigError("integrate_truncated: initial datum outside the mode set");
        y[it - modes.begin()] = v;
    }

    std::vector<double> omega(n), weight(n);
    std::vector<ShellKey> shell(n);
    for (int i = 0; i < n; ++i) {
        shell[i] = modes[std::size_t(i)].shell();
        omega[i] = freq.omega(shell[i]);
        weight[i] = std::pow(1.0 + double(shell[i]), opt.s);
    }

    StabilityRecord rec;
    const std::int64_t nsteps = std::llround(opt.T / opt.dt);
    const std::int64_t every =
        std::max<std::int64_t>(1, std::llround(opt.sample_interval / opt.dt));

    // z = e^{i omega t} y; dz/dt = e^{i omega t} X_nl(e^{-i omega t} z)
    std::vector<cplx> z = y, k1(n), k2(n), k3(n), k4(n), tmp(n), rot(n);
    auto deriv = [&](const std::vector<cplx>& zz, double t, std::vector<cplx>& out) {
        if (opt.rotating_frame) {
            for (int i = 0; i < n; ++i) rot[i] = zz[i] * std::exp(cplx(0.0, -omega[i] * t));
            cf.eval(rot, out);
            for (int i = 0; i < n; ++i) out[i] *= std::exp(cplx(0.0, omega[i] * t));
        } else {
            cf.eval(zz, out);
            for (int i = 0; i < n; ++i) out[i] += cplx(0.0, -omega[i]) * zz[i];
        }
    };

    auto sample = [&](double t) {
        rec.times.push_back(t);
        std::map<ShellKey, double> sa;
        double mass = 0.0, ns2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double a2 = std::norm(z[i]);  // rotation preserves |.| per mode
            mass += a2;
            ns2 += a2 * weight[i];
            sa[shell[i]] += a2;
        }
        rec.mass.push_back(mass);
        rec.norm_s.push_back(std::sqrt(ns2));
        for (const auto& [mu, v] : sa) rec.super_actions[mu].push_back(v);
    };

    sample(0.0);
    const double h = opt.dt;
    for (std::int64_t step = 1; step <= nsteps; ++step) {
        double t = double(step - 1) * h;
        deriv(z, t, k1);
        for (int i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
        deriv(tmp, t + 0.5 * h, k2);
        for (int i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
        deriv(tmp, t + 0.5 * h, k3);
        for (int i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
        deriv(tmp, t + h, k4);
        for (int i = 0; i < n; ++i)
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (step % every == 0 || step == nsteps) {
            double now = double(step) * h;
            double chk = 0.0;
            for (const auto& v : z) chk += std::norm(v);
            if (!std::isfinite(chk)) {
                rec.aborted = true;
                rec.abort_reason = "truncated flow diverged at t = " + std::to_string(now);
                break;
            }
            sample(now);
        }
    }
    return rec;
}

}  // namespace nlslab

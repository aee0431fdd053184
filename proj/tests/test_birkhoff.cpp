#include "catch_amalgamated.hpp"

#include <random>

#include "nlslab/birkhoff.hpp"

using namespace nlslab;

namespace {

std::mt19937_64 rng(4242);
double urand() { return 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0; }

MultiIndex<1> mi(std::initializer_list<int> modes) {
    MultiIndex<1> m;
    for (int n : modes) m = m.bump(Mode<1>(n), 1);
    return m;
}

template <class S, int D>
void add_real_term(PolyHamiltonian<S, D>& H, const MultiIndex<D>& a, const MultiIndex<D>& b,
                   const S& c) {
    if (a == b) {
        S half = ScalarOps<S>::from_ratio(1, 2);
        H.add_term({a, b}, (c + ScalarOps<S>::conj(c)) * half);
        return;
    }
    H.add_term({a, b}, c);
    H.add_term({b, a}, ScalarOps<S>::conj(c));
}

using Point = std::map<Mode<1>, cplx>;

Point random_point(const std::vector<Mode<1>>& modes, double scale) {
    Point y;
    for (const auto& m : modes) y[m] = scale * cplx(urand(), urand());
    return y;
}

// RK4 flow of dy/dt = X^{(y)}(y, conj y)
Point flow(const PolyVectorField<cplx, 1>& X, Point y, double T, int steps) {
    for (const auto& [k, c] : X.terms()) {
        y.try_emplace(k.target, 0.0);
        for (const auto& [m, p] : k.alpha.factors()) y.try_emplace(m, 0.0);
        for (const auto& [m, p] : k.beta.factors()) y.try_emplace(m, 0.0);
    }
    double h = T / steps;
    auto add = [](const Point& a, const std::map<Mode<1>, cplx>& b, double w) {
        Point r = a;
        for (const auto& [m, v] : b) r[m] += w * v;
        return r;
    };
    for (int s = 0; s < steps; ++s) {
        auto k1 = X.evaluate_y(y);
        auto k2 = X.evaluate_y(add(y, k1, h / 2));
        auto k3 = X.evaluate_y(add(y, k2, h / 2));
        auto k4 = X.evaluate_y(add(y, k3, h));
        for (auto& [m, v] : y) v += h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
    }
    return y;
}

// the exact pipeline input: diagonalized blocks rationalized coefficient-wise
PolyHamiltonian<Radical, 1> exact_pipeline_input(int p, int n_trunc, int max_ham_degree) {
    auto Hnum = diagonalized_nonlinear_hamiltonian<1>(p, 1.0, n_trunc, max_ham_degree);
    return Hnum.convert<Radical>();
}

}  // namespace

TEST_CASE("classify: action terms, a frozen divisor, 2d shell matching") {
    auto freq = frequencies(1, 1.0, 16);

    FieldKey<1> action{mi({2, 1}), mi({2}), Mode<1>(1), false};
    auto v1 = classify(action, freq);
    CHECK(v1.resonant);
    CHECK(v1.lambda.empty());
    CHECK(v1.divisor == 0.0);

    FieldKey<1> nr{mi({3, -1}), mi({1}), Mode<1>(1), false};
    auto v2 = classify(nr, freq);
    CHECK(!v2.resonant);
    CHECK(v2.lambda.at(9) == 1);
    CHECK(v2.lambda.at(1) == -1);
    CHECK(v2.divisor == Catch::Approx(8.2178235634973222).epsilon(1e-12));

    auto freq2 = frequencies(1, 0.7, 9);
    // y_{(1,0)} y_{(0,1)} ybar_{(1,0)} d_{y_{(0,1)}}: in-shell transfer, resonant
    FieldKey<2> shell2{MultiIndex<2>::single(Mode<2>(1, 0)) + MultiIndex<2>::single(Mode<2>(0, 1)),
                       MultiIndex<2>::single(Mode<2>(1, 0)), Mode<2>(0, 1), false};
    CHECK(shell2.momentum().is_zero());
    auto v3 = classify(shell2, freq2);
    CHECK(v3.resonant);
    // a cross-shell transfer is not resonant
    FieldKey<2> off{MultiIndex<2>::single(Mode<2>(1, 1)) + MultiIndex<2>::single(Mode<2>(1, -1)),
                    MultiIndex<2>::single(Mode<2>(1, 0)), Mode<2>(1, 0), false};
    CHECK(off.momentum().is_zero());
    CHECK(!classify(off, freq2).resonant);

    FieldKey<1> bad{mi({1}), {}, Mode<1>(2), false};
    CHECK_THROWS_AS(classify(bad, freq), ConfigError);

    FieldKey<1> far{mi({5, -5, 1}), mi({5, -5}), Mode<1>(1), false};
    CHECK_THROWS_AS(classify(far, frequencies(1, 1.0, 4)), ConfigError);
}

TEST_CASE("homological solve: resonant input passes through") {
    ExactFrequencyTable freq{1, Rational(1)};
    PolyHamiltonian<Radical, 1> f;
    add_real_term(f, mi({1, -1}), mi({1, -1}), Radical(RatC(Rational(3, 7))));
    auto Y = vector_field_of(f);
    auto sol = solve_homological(Y, freq);
    CHECK(sol.generator.empty());
    CHECK(sol.resonant_part == Y);
    CHECK(homological_residual(Y, sol, freq) == 0.0);
}

TEST_CASE("homological solve: single nonresonant term, exact identity") {
    ExactFrequencyTable freq{1, Rational(1)};
    PolyHamiltonian<Radical, 1> f;
    // y_1^2 ybar_2 + c.c.: lambda = (2 at mu=1, -1 at mu=4)
    add_real_term(f, mi({1, 1}), mi({2}), Radical(RatC(Rational(5, 3), Rational(1, 2))));
    auto Y = vector_field_of(f);
    auto sol = solve_homological(Y, freq);
    CHECK(sol.resonant_part.empty());
    CHECK(!sol.generator.empty());
    CHECK(sol.generator.is_real_hamiltonian());
    CHECK(sol.generator.is_momentum_conserving());
    CHECK(homological_residual(Y, sol, freq) == 0.0);

    // generator coefficient is i f / delta with delta = 2 Omega(1) - Omega(4)
    auto delta = Radical(2) * freq.omega(1) - freq.omega(4);
    auto expect = Radical::i() * Radical(RatC(Rational(5, 3), Rational(1, 2))) / delta;
    CHECK(sol.generator.coeff({mi({1, 1}), mi({2})}) == expect);
}

TEST_CASE("homological identity on the full cubic block (exact replay)") {
    for (int p : {1, 2}) {
        ExactFrequencyTable freq{p, Rational(1)};
        auto H = exact_pipeline_input(p, 3, 4);
        for (int ham_deg : {3, 4}) {
            auto block = H.homogeneous_part(ham_deg);
            if (block.empty()) continue;
            auto Y = vector_field_of(block);
            auto sol = solve_homological(Y, freq);
            CHECK(homological_residual(Y, sol, freq) == 0.0);  // literally exact
            CHECK(sol.generator.is_real_hamiltonian());
            CHECK(sol.generator.is_momentum_conserving());
        }
    }
}

TEST_CASE("near-resonance floor reports instead of dividing") {
    ExactFrequencyTable freq{1, Rational(1)};
    PolyHamiltonian<Radical, 1> f;
    add_real_term(f, mi({1, 1}), mi({2}), Radical(RatC(Rational(1))));
    auto Y = vector_field_of(f);
    CHECK_THROWS_AS(solve_homological(Y, freq, /*floor=*/100.0), NearResonanceError);
    try {
        solve_homological(Y, freq, 100.0);
    } catch (const NearResonanceError& e) {
        CHECK(std::abs(e.divisor - (2.0 * std::sqrt(3.0) - std::sqrt(24.0))) < 1e-12);
        CHECK(e.floor == 100.0);
    }
}

TEST_CASE("lie transform: zero generator is the identity") {
    auto H = exact_pipeline_input(1, 2, 5);
    auto X = vector_field_of(H);
    PolyHamiltonian<Radical, 1> zero;
    CHECK(lie_transform(X, zero, 6) == X);
    CHECK(lie_transform_hamiltonian(H, zero, 6) == H);
}

TEST_CASE("lie transform: hamiltonian and field routes agree exactly") {
    ExactFrequencyTable freq{1, Rational(1)};
    auto H = exact_pipeline_input(1, 2, 5);
    PolyHamiltonian<Radical, 1> H2;
    for (const auto& m : modes_within<1>(2)) {
        auto e = MultiIndex<1>::single(m);
        H2.add_term({e, e}, freq.omega(m.shell()));
    }
    auto full = H2;
    full += H;

    auto sol = solve_homological_ham(H.homogeneous_part(3), freq);
    auto lhs = vector_field_of(lie_transform_hamiltonian(full, sol.generator, 7));
    auto rhs = lie_transform(vector_field_of(full), sol.generator, 6);
    CHECK(lhs == rhs);

    // the cancellation: the transformed degree-3 block is resonant only
    auto t3 = lie_transform_hamiltonian(full, sol.generator, 7).homogeneous_part(3);
    for (const auto& [k, c] : t3.terms()) CHECK(lambda_vector(k.alpha, k.beta).empty());
}

TEST_CASE("lie transform against numerical flow conjugation") {
    // y' = lie_transform(X, chi) must satisfy
    //   flow_{X'}^t = Phi_chi^{-1} o flow_X^t o Phi_chi
    // up to the truncated degrees; the mismatch at radius r scales like
    // r^{cap+1} measured against the r^1 scale of the state itself.
    auto modes = modes_within<1>(1);
    PolyHamiltonian<cplx, 1> Hnl;
    add_real_term(Hnl, mi({1, -1, 1}), mi({1}), cplx(0.31, 0.11));
    add_real_term(Hnl, mi({1, -1}), mi({1, -1}), cplx(0.2, 0.0));
    PolyHamiltonian<cplx, 1> chi;
    add_real_term(chi, mi({1, 1}), mi({-1}), cplx(0.15, -0.07));

    PolyHamiltonian<cplx, 1> H2;
    auto freq = frequencies(1, 1.0, 1);
    for (const auto& m : modes) {
        auto e = MultiIndex<1>::single(m);
        H2.add_term({e, e}, cplx(freq.omega(m.shell()), 0.0));
    }
    auto full = H2;
    full += Hnl;
    auto X = vector_field_of(full);
    auto Xchi = vector_field_of(chi);

    const int cap = 6;
    auto Xp = lie_transform(X, chi, cap);

    const double T = 0.4;
    auto err_at = [&](double r) {
        auto z0 = random_point(modes, r);
        auto mapped = flow(Xchi, z0, 1.0, 400);        // Phi_chi(z0)
        auto conj_path = flow(X, mapped, T, 800);      // flow_X^T
        conj_path = flow(Xchi, conj_path, -1.0, 400);  // Phi_chi^{-1}
        auto direct = flow(Xp, z0, T, 800);
        double e = 0.0;
        for (const auto& [m, v] : direct) e = std::max(e, std::abs(v - conj_path[m]));
        return e;
    };

    rng.seed(77);
    double e1 = err_at(0.2);
    rng.seed(77);
    double e2 = err_at(0.1);
    double slope = std::log2(e1 / e2);
    CHECK(slope > cap + 0.2);  // truncation error only: order cap+1 in r
    CHECK(e2 < 1e-8);
}

TEST_CASE("normalize: ell = 0 leaves no resonant part beyond the linear flow") {
    auto H = exact_pipeline_input(1, 2, 5);
    ExactFrequencyTable freq{1, Rational(1)};
    auto nf = normalize(H, freq, {.ell = 0, .n_trunc = 2});
    CHECK(nf.resonant.empty());
    CHECK(!nf.remainder.empty());
    CHECK(nf.remainder.min_degree() == 3);
}

TEST_CASE("normalize: structure of the resonant part (exact, d=1)") {
    ExactFrequencyTable freq{1, Rational(1)};
    auto H = exact_pipeline_input(1, 2, 5);
    auto nf = normalize(H, freq, {.ell = 2, .n_trunc = 2});

    CHECK(nf.resonant.satisfies_reality());
    CHECK(nf.resonant.is_momentum_conserving());
    CHECK(!nf.resonant.empty());
    CHECK(nf.resonant.max_degree() <= 4);
    CHECK(nf.remainder.min_degree() >= 5);

    // every resonant term factors as (shell-balanced pairs) x y_i d_{y_m}
    // with |i| = |m|; in d=1 that is the P_m y_m + Q_m y_{-m} form
    for (const auto& [k, c] : nf.resonant.terms()) {
        CHECK(lambda_vector(k).empty());
        if (k.conj) continue;
        bool form = false;
        for (const Mode<1>& i : {k.target, -k.target}) {
            if (k.alpha.power_of(i) == 0) continue;
            auto rest = lambda_vector(k.alpha.bump(i, -1), k.beta);
            if (rest.empty()) form = true;
        }
        CHECK(form);
    }

    // odd field degrees come from even Hamiltonians: no resonant terms there
    CHECK(nf.resonant.homogeneous_part(2).empty());
    CHECK(nf.resonant.homogeneous_part(4).empty());

    // generators: real, momentum conserving, one per treated degree
    REQUIRE(nf.generators.size() == 3);
    for (const auto& g : nf.generators) {
        CHECK(g.is_real_hamiltonian());
        CHECK(g.is_momentum_conserving());
    }

    // census saw the cubic block as entirely nonresonant
    CHECK(nf.census.at(2).resonant == 0);
    CHECK(nf.census.at(2).nonresonant > 0);
    CHECK(nf.census.at(3).resonant > 0);
}

TEST_CASE("normalize: the resonant field Poisson-commutes with every super-action") {
    for (int p : {1, 2}) {
        ExactFrequencyTable freq{p, Rational(1)};
        auto H = exact_pipeline_input(p, 2, 5);
        auto nf = normalize(H, freq, {.ell = 2, .n_trunc = 2});
        for (ShellKey mu : {ShellKey(1), ShellKey(4)}) {
            PolyHamiltonian<Radical, 1> I_mu;
            for (const auto& m : modes_within<1>(2)) {
                if (m.shell() != mu) continue;
                auto e = MultiIndex<1>::single(m);
                I_mu.add_term({e, e}, Radical(1));
            }
            auto dI = derivative_along(I_mu, nf.resonant, 10);
            CHECK(dI.empty());  // the zero polynomial, exactly
        }
    }
}

TEST_CASE("shell matrices: identity case, explicit diagonal, dynamics replay") {
    auto freq = frequencies(1, 1.0, 4);
    auto modes = modes_within<1>(2);

    PolyVectorField<cplx, 1> zero;
    auto base = shell_matrices(zero, freq, modes, random_point(modes, 0.3));
    REQUIRE(base.size() == 2);
    for (const auto& sm : base) {
        for (std::size_t i = 0; i < sm.modes.size(); ++i)
            for (std::size_t j = 0; j < sm.modes.size(); ++j)
                CHECK(sm.entries[i][j] ==
                      (i == j ? cplx(freq.omega(sm.mu), 0.0) : cplx(0.0, 0.0)));
    }

    // H = 1/2 |y_1|^4 gives i dy_1/dt = |y_1|^2 y_1: diagonal entry Omega + |y_1|^2
    PolyHamiltonian<cplx, 1> H;
    add_real_term(H, mi({1, 1}), mi({1, 1}), cplx(0.5, 0.0));
    auto R = vector_field_of(H);
    auto y = random_point(modes, 0.4);
    auto ms = shell_matrices(R, freq, modes, y);
    for (const auto& sm : ms) {
        if (sm.mu != 1) continue;
        int idx = sm.modes[0] == Mode<1>(1) ? 0 : 1;
        CHECK(std::abs(sm.entries[idx][idx] -
                       cplx(freq.omega(1) + std::norm(y.at(Mode<1>(1))), 0.0)) < 1e-14);
    }

    // i dy/dt restricted to a shell equals M_mu (shell vector)
    auto HH = exact_pipeline_input(1, 2, 5);
    ExactFrequencyTable efreq{1, Rational(1)};
    auto nf = normalize(HH, efreq, {.ell = 2, .n_trunc = 2});
    auto Rn = nf.resonant.convert<cplx>();
    auto point = random_point(modes, 0.3);
    auto mats = shell_matrices(Rn, freq, modes, point);
    auto xdot = Rn.evaluate_y(point);
    for (const auto& sm : mats) {
        for (std::size_t r = 0; r < sm.modes.size(); ++r) {
            cplx lhs{0.0, 0.0};
            for (std::size_t ccol = 0; ccol < sm.modes.size(); ++ccol)
                lhs += sm.entries[r][ccol] * point.at(sm.modes[ccol]);
            // i dy/dt = omega y + i * (true nonlinear field)
            cplx rhs = freq.omega(sm.mu) * point.at(sm.modes[r]) +
                       cplx(0.0, 1.0) * xdot[sm.modes[r]];
            CHECK(std::abs(lhs - rhs) < 1e-13);
        }
    }

    // corrupting one d_y coefficient breaks the pairing and must hard-fail
    auto bad = Rn;
    for (const auto& [k, c] : Rn.terms()) {
        if (!k.conj) {
            bad.add_term(k, cplx(1e-3, 2e-3));
            break;
        }
    }
    CHECK_THROWS_AS(shell_matrices(bad, freq, modes, point), NumericalError);
}

TEST_CASE("Hermiticity sweep at random points") {
    ExactFrequencyTable efreq{1, Rational(1)};
    auto nf = normalize(exact_pipeline_input(1, 2, 6), efreq,
                        {.ell = 3, .n_trunc = 2});
    auto R = nf.resonant.convert<cplx>();
    auto freq = frequencies(1, 1.0, 4);
    auto modes = modes_within<1>(2);
    for (int rep = 0; rep < 100; ++rep) {
        auto mats = shell_matrices(R, freq, modes, random_point(modes, 0.5), 1e-12);
        for (const auto& sm : mats) CHECK(sm.hermiticity_defect <= 1e-12);
    }
}

TEST_CASE("truncated flow: linear-only preserves every modulus") {
    NormalFormResult<cplx, 1> nf;
    nf.ell = 1;
    nf.n_trunc = 2;
    auto freq = frequencies(1, 0.9, 4);
    SpectralField<1> y0(2);
    y0.set(Mode<1>(1), cplx(0.1, 0.05));
    y0.set(Mode<1>(-2), cplx(0.02, -0.07));
    auto rec = integrate_truncated(nf, freq, y0, {.T = 20.0, .dt = 1e-2, .s = 3.0});
    REQUIRE(!rec.aborted);
    for (double m : rec.mass) CHECK(std::abs(m - rec.mass.front()) < 1e-14);
    for (double n : rec.norm_s) CHECK(std::abs(n - rec.norm_s.front()) < 1e-13);
}

TEST_CASE("truncated resonant flow conserves super-actions") {
    ExactFrequencyTable efreq{1, Rational(1)};
    auto nf = normalize(exact_pipeline_input(1, 2, 5), efreq, {.ell = 2, .n_trunc = 2});
    NormalFormResult<cplx, 1> nfn;
    nfn.resonant = nf.resonant.convert<cplx>();
    nfn.remainder = nf.remainder.convert<cplx>();
    nfn.ell = nf.ell;
    nfn.n_trunc = nf.n_trunc;

    auto freq = frequencies(1, 1.0, 4);
    SpectralField<1> y0(2);
    rng.seed(31);
    for (const auto& m : modes_within<1>(2)) y0.set(m, 0.1 * cplx(urand(), urand()));

    auto rec = integrate_truncated(nfn, freq, y0,
                                   {.T = 50.0, .dt = 1e-2, .s = 6.0, .sample_interval = 5.0});
    REQUIRE(!rec.aborted);
    for (const auto& [mu, series] : rec.super_actions)
        for (double v : series) CHECK(std::abs(v - series.front()) < 1e-12);

    // with the remainder switched on the super-actions do drift
    auto rec2 = integrate_truncated(nfn, freq, y0,
                                    {.T = 50.0,
                                     .dt = 1e-2,
                                     .s = 6.0,
                                     .sample_interval = 5.0,
                                     .include_remainder = true});
    double drift = 0.0;
    for (const auto& [mu, series] : rec2.super_actions)
        for (double v : series) drift = std::max(drift, std::abs(v - series.front()));
    CHECK(drift > 1e-10);
}

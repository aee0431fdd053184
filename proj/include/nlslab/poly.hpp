#pragma once

// Sparse exact algebra of polynomials and polynomial vector fields in the
// mode variables (y, ybar).
//
// Conventions.  A Hamiltonian term is  c * y^alpha ybar^beta  with the
// reality pairing c(beta,alpha) = conj(c(alpha,beta)).  Its vector field is
//   d/dt y_m    = -i dH/dybar_m      (so H = Omega |y_m|^2 gives
//   d/dt ybar_m = +i dH/dy_m          d/dt y_m = -i Omega y_m)
// and a field term is  c * y^alpha ybar^beta  on the component d_{y_m}
// (conj = 0) or d_{ybar_m} (conj = 1).
//
// The scalar type S is std::complex<double> or Radical (exact); all term
// bookkeeping below is independent of it.

#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "nlslab/lattice.hpp"
#include "nlslab/scalar.hpp"

namespace nlslab {

inline constexpr int kDefaultDegreeBudget = 8;

// ---------------------------------------------------------------------------
// Multi-indices: sorted (mode, power) pairs, merged, powers > 0.

template <int D>
class MultiIndex {
  public:
    using Entry = std::pair<Mode<D>, int>;

    MultiIndex() = default;
    static MultiIndex single(const Mode<D>& m, int pow = 1) {
        MultiIndex mi;
        if (pow > 0) mi.f_.push_back({m, pow});
        return mi;
    }

    int degree() const {
        int s = 0;
        for (const auto& [m, p] : f_) s += p;
        return s;
    }

    int power_of(const Mode<D>& m) const {
        for (const auto& [k, p] : f_)
            if (k == m) return p;
        return 0;
    }

    bool empty() const { return f_.empty(); }
    const std::vector<Entry>& factors() const { return f_; }

    // add delta (may be negative) to the power of m
    MultiIndex bump(const Mode<D>& m, int delta) const {
        MultiIndex out = *this;
        auto it = std::lower_bound(out.f_.begin(), out.f_.end(), m,
                                   [](const Entry& e, const Mode<D>& k) { return e.first < k; });
        if (it != out.f_.end() && it->first == m) {
            it->second += delta;
            if (it->second < 0) throw ConfigError("MultiIndex: negative power");
            if (it->second == 0) out.f_.erase(it);
        } else {
            if (delta < 0) throw ConfigError("MultiIndex: negative power");
            if (delta > 0) out.f_.insert(it, {m, delta});
        }
        return out;
    }

    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex out = *this;
        for (const auto& [m, p] : o.f_) out = out.bump(m, p);
        return out;
    }

    Mode<D> weighted_mode_sum() const {
        Mode<D> s{};
        for (const auto& [m, p] : f_)
            for (int i = 0; i < D; ++i) s.n[i] += m.n[i] * p;
        return s;
    }

    std::map<ShellKey, int> shell_counts() const {
        std::map<ShellKey, int> c;
        for (const auto& [m, p] : f_) c[m.shell()] += p;
        return c;
    }

    int max_mode_abs() const {
        int v = 0;
        for (const auto& [m, p] : f_) v = std::max(v, m.max_abs());
        return v;
    }

    auto operator<=>(const MultiIndex&) const = default;

    std::string str() const {
        std::ostringstream os;
        for (const auto& [m, p] : f_) os << m.str() << "^" << p << " ";
        return os.str();
    }

  private:
    std::vector<Entry> f_;
};

// ---------------------------------------------------------------------------
// Term keys.

template <int D>
struct HamKey {
    MultiIndex<D> alpha, beta;
    auto operator<=>(const HamKey&) const = default;

    int degree() const { return alpha.degree() + beta.degree(); }
    Mode<D> momentum() const { return alpha.weighted_mode_sum() - beta.weighted_mode_sum(); }
    HamKey conjugate() const { return {beta, alpha}; }
};

template <int D>
struct FieldKey {
    MultiIndex<D> alpha, beta;
    Mode<D> target{};
    bool conj = false;
    auto operator<=>(const FieldKey&) const = default;

    int degree() const { return alpha.degree() + beta.degree(); }

    // per the conservation law: alpha-sum minus beta-sum minus (+-target)
    Mode<D> momentum() const {
        Mode<D> s = alpha.weighted_mode_sum() - beta.weighted_mode_sum();
        return conj ? s + target : s - target;
    }

    // the reality partner carrying the conjugate coefficient
    FieldKey mirror() const { return {beta, alpha, target, !conj}; }
};

// ---------------------------------------------------------------------------
// Sparse polynomial (used for Hamiltonians and for scalar polynomials such
// as shell-matrix entries).

template <class S, int D>
class PolyHamiltonian {
  public:
    using Key = HamKey<D>;
    using Ops = ScalarOps<S>;
    using Map = std::map<Key, S>;

    const Map& terms() const { return t_; }
    bool empty() const { return t_.empty(); }
    std::size_t size() const { return t_.size(); }

    void add_term(const Key& k, const S& c) {
        if (Ops::is_zero(c)) return;
        auto it = t_.find(k);
        if (it == t_.end()) {
            t_[k] = c;
        } else {
            it->second = it->second + c;
            if (Ops::is_zero(it->second)) t_.erase(it);
        }
    }

    S coeff(const Key& k) const {
        auto it = t_.find(k);
        return it == t_.end() ? Ops::zero() : it->second;
    }

    PolyHamiltonian& operator+=(const PolyHamiltonian& o) {
        for (const auto& [k, c] : o.t_) add_term(k, c);
        return *this;
    }
    PolyHamiltonian& operator-=(const PolyHamiltonian& o) {
        for (const auto& [k, c] : o.t_) add_term(k, -c);
        return *this;
    }
    PolyHamiltonian& operator*=(const S& s) {
        if (Ops::is_zero(s)) {
            t_.clear();
            return *this;
        }
        for (auto& [k, c] : t_) c = c * s;
        return *this;
    }

    int max_degree() const {
        int d = 0;
        for (const auto& [k, c] : t_) d = std::max(d, k.degree());
        return d;
    }

    PolyHamiltonian homogeneous_part(int degree) const {
        PolyHamiltonian out;
        for (const auto& [k, c] : t_)
            if (k.degree() == degree) out.t_[k] = c;
        return out;
    }

    PolyHamiltonian truncate_degree(int cap) const {
        PolyHamiltonian out;
        for (const auto& [k, c] : t_)
            if (k.degree() <= cap) out.t_[k] = c;
        return out;
    }

    // exact test of the reality pairing c(beta,alpha) = conj(c(alpha,beta))
    bool is_real_hamiltonian() const {
        for (const auto& [k, c] : t_) {
            if (!(coeff(k.conjugate()) == Ops::conj(c))) return false;
        }
        return true;
    }

    bool is_momentum_conserving() const {
        for (const auto& [k, c] : t_)
            if (!k.momentum().is_zero()) return false;
        return true;
    }

    cplx evaluate(const std::map<Mode<D>, cplx>& y) const {
        cplx acc{0.0, 0.0};
        for (const auto& [k, c] : t_) {
            cplx v = Ops::to_cplx(c);
            for (const auto& [m, p] : k.alpha.factors())
                for (int i = 0; i < p; ++i) v *= value_of(y, m);
            for (const auto& [m, p] : k.beta.factors())
                for (int i = 0; i < p; ++i) v *= std::conj(value_of(y, m));
            acc += v;
        }
        return acc;
    }

    template <class S2>
    PolyHamiltonian<S2, D> convert() const {
        PolyHamiltonian<S2, D> out;
        for (const auto& [k, c] : t_) out.add_term(k, ScalarOps<S2>::from_cplx(Ops::to_cplx(c)));
        return out;
    }

    bool operator==(const PolyHamiltonian&) const = default;

  private:
    static cplx value_of(const std::map<Mode<D>, cplx>& y, const Mode<D>& m) {
        auto it = y.find(m);
        return it == y.end() ? cplx{0.0, 0.0} : it->second;
    }

    Map t_;
};

// ---------------------------------------------------------------------------
// Polynomial vector field.

template <class S, int D>
class PolyVectorField {
  public:
    using Key = FieldKey<D>;
    using Ops = ScalarOps<S>;
    using Map = std::map<Key, S>;

    const Map& terms() const { return t_; }
    bool empty() const { return t_.empty(); }
    std::size_t size() const { return t_.size(); }

    void add_term(const Key& k, const S& c) {
        if (Ops::is_zero(c)) return;
        auto it = t_.find(k);
        if (it == t_.end()) {
            t_[k] = c;
        } else {
            it->second = it->second + c;
            if (Ops::is_zero(it->second)) t_.erase(it);
        }
    }

    S coeff(const Key& k) const {
        auto it = t_.find(k);
        return it == t_.end() ? Ops::zero() : it->second;
    }

    PolyVectorField& operator+=(const PolyVectorField& o) {
        for (const auto& [k, c] : o.t_) add_term(k, c);
        return *this;
    }
    PolyVectorField& operator-=(const PolyVectorField& o) {
        for (const auto& [k, c] : o.t_) add_term(k, -c);
        return *this;
    }
    PolyVectorField& operator*=(const S& s) {
        if (Ops::is_zero(s)) {
            t_.clear();
            return *this;
        }
        for (auto& [k, c] : t_) c = c * s;
        return *this;
    }

    int max_degree() const {
        int d = 0;
        for (const auto& [k, c] : t_) d = std::max(d, k.degree());
        return d;
    }
    int min_degree() const {
        int d = 1 << 20;
        for (const auto& [k, c] : t_) d = std::min(d, k.degree());
        return t_.empty() ? 0 : d;
    }

    PolyVectorField homogeneous_part(int degree) const {
        PolyVectorField out;
        for (const auto& [k, c] : t_)
            if (k.degree() == degree) out.t_[k] = c;
        return out;
    }

    PolyVectorField degree_range(int lo, int hi) const {
        PolyVectorField out;
        for (const auto& [k, c] : t_)
            if (k.degree() >= lo && k.degree() <= hi) out.t_[k] = c;
        return out;
    }

    bool is_homogeneous() const { return empty() || min_degree() == max_degree(); }

    // conj components must carry the conjugate coefficients of their mirrors
    bool satisfies_reality() const {
        for (const auto& [k, c] : t_)
            if (!(coeff(k.mirror()) == Ops::conj(c))) return false;
        return true;
    }

    bool is_momentum_conserving() const {
        for (const auto& [k, c] : t_)
            if (!k.momentum().is_zero()) return false;
        return true;
    }

    // value of the d_{y_m} components at a point (ybar = conj y)
    std::map<Mode<D>, cplx> evaluate_y(const std::map<Mode<D>, cplx>& y) const {
        std::map<Mode<D>, cplx> out;
        for (const auto& [k, c] : t_) {
            if (k.conj) continue;
            cplx v = Ops::to_cplx(c);
            for (const auto& [m, p] : k.alpha.factors())
                for (int i = 0; i < p; ++i) v *= value_of(y, m);
            for (const auto& [m, p] : k.beta.factors())
                for (int i = 0; i < p; ++i) v *= std::conj(value_of(y, m));
            out[k.target] += v;
        }
        return out;
    }

    template <class S2>
    PolyVectorField<S2, D> convert() const {
        PolyVectorField<S2, D> out;
        for (const auto& [k, c] : t_) out.add_term(k, ScalarOps<S2>::from_cplx(Ops::to_cplx(c)));
        return out;
    }

    bool operator==(const PolyVectorField&) const = default;

  private:
    static cplx value_of(const std::map<Mode<D>, cplx>& y, const Mode<D>& m) {
        auto it = y.find(m);
        return it == y.end() ? cplx{0.0, 0.0} : it->second;
    }

    Map t_;
};

// ---------------------------------------------------------------------------
// Hamiltonian -> vector field and back.

template <class S, int D>
PolyVectorField<S, D> vector_field_of(const PolyHamiltonian<S, D>& H) {
    using Ops = ScalarOps<S>;
    PolyVectorField<S, D> X;
    for (const auto& [k, h] : H.terms()) {
        for (const auto& [m, p] : k.beta.factors()) {
            // -i dH/dybar_m on d_{y_m}
            S c = -Ops::mul_i(h * Ops::from_ratio(p, 1));
            X.add_term({k.alpha, k.beta.bump(m, -1), m, false}, c);
        }
        for (const auto& [m, p] : k.alpha.factors()) {
            // +i dH/dy_m on d_{ybar_m}
            S c = Ops::mul_i(h * Ops::from_ratio(p, 1));
            X.add_term({k.alpha.bump(m, -1), k.beta, m, true}, c);
        }
    }
    return X;
}

// Inverse of vector_field_of for fields that are Hamiltonian.  A d_{y_m}
// term determines the coefficient of y^alpha ybar^{beta+e_m}, a d_{ybar_m}
// term that of y^{alpha+e_m} ybar^beta (needed for terms with an empty
// beta, which have no d_y components at all).  When several components
// determine the same coefficient they must agree, which is asserted.
template <class S, int D>
PolyHamiltonian<S, D> hamiltonian_of(const PolyVectorField<S, D>& X) {
    using Ops = ScalarOps<S>;
    PolyHamiltonian<S, D> H;
    std::map<HamKey<D>, bool> seen;
    auto put = [&](const HamKey<D>& hk, const S& h) {
        if (seen.count(hk)) {
            S diff = H.coeff(hk) - h;
            if (!Ops::is_zero(diff) &&
                std::abs(Ops::to_cplx(diff)) > 1e-12 * (1.0 + std::abs(Ops::to_cplx(h))))
                throw NumericalError("hamiltonian_of: field is not a Hamiltonian vector field");
        } else {
            seen[hk] = true;
            H.add_term(hk, h);
        }
    };
    for (const auto& [k, c] : X.terms()) {
        if (k.conj) {
            HamKey<D> hk{k.alpha.bump(k.target, +1), k.beta};
            int p = hk.alpha.power_of(k.target);
            put(hk, -Ops::mul_i(c) * Ops::from_ratio(1, p));
        } else {
            HamKey<D> hk{k.alpha, k.beta.bump(k.target, +1)};
            int p = hk.beta.power_of(k.target);
            put(hk, Ops::mul_i(c) * Ops::from_ratio(1, p));
        }
    }
    return H;
}

// ---------------------------------------------------------------------------
// Poisson bracket {F,G} = -i sum_m (dF/dy_m dG/dybar_m - dF/dybar_m dG/dy_m),
// normalized so dF/dt = {F,G} along the flow of G.

template <class S, int D>
PolyHamiltonian<S, D> poisson_bracket(const PolyHamiltonian<S, D>& F,
                                      const PolyHamiltonian<S, D>& G,
                                      int degree_budget = kDefaultDegreeBudget,
                                      bool truncate = false) {
    using Ops = ScalarOps<S>;
    PolyHamiltonian<S, D> out;
    for (const auto& [kf, f] : F.terms()) {
        for (const auto& [kg, g] : G.terms()) {
            int deg = kf.degree() + kg.degree() - 2;
            if (deg > degree_budget) {
                if (truncate) continue;
                throw ConfigError("poisson_bracket: degree budget exceeded");
            }
            S fg = f * g;
            for (const auto& [m, pa] : kf.alpha.factors()) {
                int pb = kg.beta.power_of(m);
                if (pb == 0) continue;
                S c = -Ops::mul_i(fg * Ops::from_ratio(1LL * pa * pb, 1));
                out.add_term({kf.alpha.bump(m, -1) + kg.alpha, kf.beta + kg.beta.bump(m, -1)}, c);
            }
            for (const auto& [m, pb] : kf.beta.factors()) {
                int pa = kg.alpha.power_of(m);
                if (pa == 0) continue;
                S c = Ops::mul_i(fg * Ops::from_ratio(1LL * pa * pb, 1));
                out.add_term({kf.alpha + kg.alpha.bump(m, -1), kf.beta.bump(m, -1) + kg.beta}, c);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lie bracket of vector fields, [X,Y] = DY.X - DX.Y.

namespace poly_detail {

// accumulate DY.X into out
template <class S, int D>
void directional_derivative(const PolyVectorField<S, D>& Y, const PolyVectorField<S, D>& X,
                            PolyVectorField<S, D>& out, int degree_budget, bool truncate,
                            bool negate) {
    using Ops = ScalarOps<S>;
    for (const auto& [ky, cy] : Y.terms()) {
        for (const auto& [kx, cx] : X.terms()) {
            int deg = ky.degree() - 1 + kx.degree();
            if (deg > degree_budget) {
                if (truncate) continue;
                throw ConfigError("lie_bracket: degree budget exceeded");
            }
            // d(Y-term)/dy_k * X^{(y_k)} and d(Y-term)/dybar_k * X^{(ybar_k)}
            int p = kx.conj ? ky.beta.power_of(kx.target) : ky.alpha.power_of(kx.target);
            if (p == 0) continue;
            S c = cy * cx * Ops::from_ratio(p, 1);
            if (negate) c = -c;
            FieldKey<D> k;
            if (!kx.conj) {
                k = {ky.alpha.bump(kx.target, -1) + kx.alpha, ky.beta + kx.beta, ky.target,
                     ky.conj};
            } else {
                k = {ky.alpha + kx.alpha, ky.beta.bump(kx.target, -1) + kx.beta, ky.target,
                     ky.conj};
            }
            out.add_term(k, c);
        }
    }
}

}  // namespace poly_detail

template <class S, int D>
PolyVectorField<S, D> lie_bracket(const PolyVectorField<S, D>& X, const PolyVectorField<S, D>& Y,
                                  int degree_budget = kDefaultDegreeBudget,
                                  bool truncate = false) {
    PolyVectorField<S, D> out;
    poly_detail::directional_derivative(Y, X, out, degree_budget, truncate, false);
    poly_detail::directional_derivative(X, Y, out, degree_budget, truncate, true);
    return out;
}

// ---------------------------------------------------------------------------
// Derivative of a scalar polynomial along a vector field:
//   dF/dt = sum_m dF/dy_m X^{(y_m)} + dF/dybar_m X^{(ybar_m)}.
// With X = X_H this equals {F, H}; it is used directly to test that resonant
// fields annihilate the super-actions.

template <class S, int D>
PolyHamiltonian<S, D> derivative_along(const PolyHamiltonian<S, D>& F,
                                       const PolyVectorField<S, D>& X,
                                       int degree_budget = kDefaultDegreeBudget,
                                       bool truncate = false) {
    using Ops = ScalarOps<S>;
    PolyHamiltonian<S, D> out;
    for (const auto& [kf, f] : F.terms()) {
        for (const auto& [kx, cx] : X.terms()) {
            int p = kx.conj ? kf.beta.power_of(kx.target) : kf.alpha.power_of(kx.target);
            if (p == 0) continue;
            int deg = kf.degree() - 1 + kx.degree();
            if (deg > degree_budget) {
                if (truncate) continue;
                throw ConfigError("derivative_along: degree budget exceeded");
            }
            S c = f * cx * Ops::from_ratio(p, 1);
            HamKey<D> k = kx.conj
                              ? HamKey<D>{kf.alpha + kx.alpha, kf.beta.bump(kx.target, -1) + kx.beta}
                              : HamKey<D>{kf.alpha.bump(kx.target, -1) + kx.alpha, kf.beta + kx.beta};
            out.add_term(k, c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Majorant: every coefficient replaced by its modulus (numeric fields).

template <int D>
PolyVectorField<cplx, D> majorant(const PolyVectorField<cplx, D>& X) {
    PolyVectorField<cplx, D> out;
    for (const auto& [k, c] : X.terms()) out.add_term(k, cplx(std::abs(c), 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// Text serialization (numeric fields), one term per line:
//   re im | alpha: (n)^k ... | beta: (n)^k ... | target (m) conj
// %.17g keeps the round trip bit-exact.

template <int D>
std::string mode_token(const Mode<D>& m) {
    return m.str();
}

template <int D>
Mode<D> parse_mode_token(const std::string& tok) {
    Mode<D> m;
    if (tok.size() < 2 || tok.front() != '(' || tok.back() != ')')
        throw ConfigError("parse_mode_token: bad token '" + tok + "'");
    std::istringstream is(tok.substr(1, tok.size() - 2));
    std::string part;
    for (int i = 0; i < D; ++i) {
        if (!std::getline(is, part, ',')) throw ConfigError("parse_mode_token: bad arity");
        m.n[i] = std::stoi(part);
    }
    if (std::getline(is, part, ',')) throw ConfigError("parse_mode_token: bad arity");
    return m;
}

template <int D>
std::string serialize(const PolyVectorField<cplx, D>& X) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [k, c] : X.terms()) {
        os << c.real() << " " << c.imag() << " | alpha:";
        for (const auto& [m, p] : k.alpha.factors()) os << " " << m.str() << "^" << p;
        os << " | beta:";
        for (const auto& [m, p] : k.beta.factors()) os << " " << m.str() << "^" << p;
        os << " | target " << k.target.str() << " " << (k.conj ? 1 : 0) << "\n";
    }
    return os.str();
}

template <int D>
PolyVectorField<cplx, D> deserialize_field(const std::string& text) {
    PolyVectorField<cplx, D> X;
    std::istringstream lines(text);
    std::string line;
    auto parse_factors = [](std::istringstream& is, const std::string& label) {
        MultiIndex<D> mi;
        std::string tok;
        is >> tok;
        if (tok != label + ":") throw ConfigError("deserialize: expected " + label);
        while (is >> tok) {
            if (tok == "|") break;
            auto caret = tok.rfind('^');
            if (caret == std::string::npos) throw ConfigError("deserialize: bad factor " + tok);
            mi = mi.bump(parse_mode_token<D>(tok.substr(0, caret)),
                         std::stoi(tok.substr(caret + 1)));
        }
        return mi;
    };
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        double re, im;
        std::string bar;
        is >> re >> im >> bar;
        if (bar != "|") throw ConfigError("deserialize: bad line '" + line + "'");
        FieldKey<D> k;
        k.alpha = parse_factors(is, "alpha");
        k.beta = parse_factors(is, "beta");
        std::string tok;
        is >> tok;
        if (tok != "target") throw ConfigError("deserialize: expected target");
        is >> tok;
        k.target = parse_mode_token<D>(tok);
        int cj;
        is >> cj;
        k.conj = cj != 0;
        X.add_term(k, cplx(re, im));
    }
    return X;
}

}  // namespace nlslab

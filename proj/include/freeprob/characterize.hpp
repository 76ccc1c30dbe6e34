#pragma once

#include "freeprob/errors.hpp"
#include "freeprob/freemoments.hpp"
#include "freeprob/laws.hpp"
#include "freeprob/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace freeprob {

enum class Theorem { T1, T2 };

// Parameters of the free pair together with the regression data of one
// theorem. Feasibility: theta > 1, lambda > 1, sigma > 0, alpha > 0 and
// cd > 1 (T1) / d > c^2 (T2).
struct TheoremParams {
    double lambda = 0, alpha = 0, sigma = 0, theta = 0;
    double c = 0, d = 0, F = 0;
};

// Forward regression constants of the two theorems: T1 pairs the mean and
// inverse mean of Y ~ nu(theta, alpha); T2 its first two inverse moments.
inline std::pair<double, double> regression_constants(double sigma, double theta, double alpha,
                                                      Theorem which) {
    (void)sigma;
    if (!(theta > 1.0)) throw ThetaNotGreaterThanOne();
    if (!(alpha > 0.0)) throw InfeasibleConstants("alpha must be positive");
    double inv1 = 1.0 / (alpha * (theta - 1.0));
    if (which == Theorem::T1) return {theta * alpha, inv1};
    double inv2 = theta / (alpha * alpha * (theta - 1.0) * (theta - 1.0) * (theta - 1.0));
    return {inv1, inv2};
}

inline TheoremParams solve_thm1(double c, double d, double F) {
    if (!(c * d > 1.0)) throw InfeasibleConstants("cd must exceed 1");
    if (!(F > 1.0)) throw InfeasibleConstants("F must exceed 1");
    TheoremParams p;
    double cd1 = c * d - 1.0;
    p.sigma = (F - 1.0) / cd1;
    p.theta = 1.0 + 1.0 / cd1;
    p.alpha = cd1 / d;
    p.lambda = p.sigma + p.theta;
    p.c = c;
    p.d = d;
    p.F = F;
    return p;
}

inline TheoremParams solve_thm2(double c, double d, double F) {
    if (!(d > c * c)) throw InfeasibleConstants("d must exceed c^2");
    if (!(F > 1.0)) throw InfeasibleConstants("F must exceed 1");
    if (!(c > 0.0)) throw InfeasibleConstants("c must be positive");
    TheoremParams p;
    double dc = d - c * c;
    p.sigma = c * c * (F - 1.0) / dc;
    p.theta = d / dc;
    p.alpha = dc / (c * c * c);
    p.lambda = 1.0 + c * c * F / dc;  // equals sigma + theta identically
    p.c = c;
    p.d = d;
    p.F = F;
    return p;
}

// ---------------------------------------------------------------------------
// Identity reports
// ---------------------------------------------------------------------------

struct IdentityCheck {
    std::string name;
    double residual_max = 0;  // max |lhs_n - rhs_n| over the checked range
    double scale = 1;         // max(1, coefficient magnitude)
    double normalized = 0;    // residual_max / scale; the gated quantity
    double tol = 0;
    bool pass = false;
    // negative controls invert the gate: they pass when the residual is large
    bool negative_control = false;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const IdentityCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
    double normalized_of(const std::string& name) const {
        const IdentityCheck* c = find(name);
        return c ? c->normalized : std::numeric_limits<double>::quiet_NaN();
    }
};

namespace detail {

template <class S>
void add_series_check(IdentityReport& rep, const std::string& name, const TruncatedSeries<S>& lhs,
                      const TruncatedSeries<S>& rhs, double tol) {
    int n = std::min(lhs.order(), rhs.order());
    double resid = 0, scale = 1;
    for (int k = 0; k <= n; ++k) {
        resid = std::max(resid, abs_to_double(lhs[k] - rhs[k]));
        scale = std::max({scale, abs_to_double(lhs[k]), abs_to_double(rhs[k])});
    }
    IdentityCheck c{name, resid, scale, resid / scale, tol, resid / scale <= tol, false};
    rep.checks.push_back(std::move(c));
}

template <class S>
void add_scalar_check(IdentityReport& rep, const std::string& name, const S& lhs, const S& rhs,
                      double tol) {
    double resid = abs_to_double(lhs - rhs);
    double scale = std::max({1.0, abs_to_double(lhs), abs_to_double(rhs)});
    IdentityCheck c{name, resid, scale, resid / scale, tol, resid / scale <= tol, false};
    rep.checks.push_back(std::move(c));
}

inline void add_negative_control(IdentityReport& rep, const std::string& name, double normalized,
                                 double threshold) {
    IdentityCheck c{name, normalized, 1.0, normalized, threshold, normalized >= threshold, true};
    rep.checks.push_back(std::move(c));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Word builders for the proof traces
// ---------------------------------------------------------------------------

namespace words {

inline void push_vu(std::vector<AlgebraElement>& f, int n) {
    for (int i = 0; i < n; ++i) {
        f.push_back({Side::V, ElementFn::power(1)});
        f.push_back({Side::U, ElementFn::power(1)});
    }
}

inline Word vu(int n) {
    std::vector<AlgebraElement> f;
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

inline Word v_vu(int n) {
    std::vector<AlgebraElement> f{{Side::V, ElementFn::power(1)}};
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

inline Word u_vu(int n) {
    std::vector<AlgebraElement> f{{Side::U, ElementFn::power(1)}};
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

inline Word ui_vu(int i, int n) {
    std::vector<AlgebraElement> f{{Side::U, ElementFn::power(i)}};
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

// (I-U)^{-1} (VU)^n
inline Word res_vu(int n) {
    std::vector<AlgebraElement> f{{Side::U, ElementFn::resolvent_one_minus(1)}};
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

// U(I-U)^{-1} (VU)^n  = sum_{i>=1} U^i (VU)^n
inline Word ures_vu(int n) {
    std::vector<AlgebraElement> f{{Side::U, ElementFn{2, 1}}};
    push_vu(f, n);
    return Word::from_factors(std::move(f));
}

// (VU)^n (I-U)^{-1} V^{-1}
inline Word vu_res_vinv(int n) {
    std::vector<AlgebraElement> f;
    push_vu(f, n);
    f.push_back({Side::U, ElementFn::resolvent_one_minus(1)});
    f.push_back({Side::V, ElementFn::power(-1)});
    return Word::from_factors(std::move(f));
}

// (VU)^n (I-U)^{-1} V^{-1} (I-U)^{-1}
inline Word vu_res_vinv_res(int n) {
    std::vector<AlgebraElement> f;
    push_vu(f, n);
    f.push_back({Side::U, ElementFn::resolvent_one_minus(1)});
    f.push_back({Side::V, ElementFn::power(-1)});
    f.push_back({Side::U, ElementFn::resolvent_one_minus(1)});
    return Word::from_factors(std::move(f));
}

// (VU)^n (I-U)^{-1} V^{-1} U(I-U)^{-1}  (the i>=0, j>=1 double resolvent sum)
inline Word vu_res_vinv_ures(int n) {
    std::vector<AlgebraElement> f;
    push_vu(f, n);
    f.push_back({Side::U, ElementFn::resolvent_one_minus(1)});
    f.push_back({Side::V, ElementFn::power(-1)});
    f.push_back({Side::U, ElementFn{2, 1}});
    return Word::from_factors(std::move(f));
}

// (VU)^n U^i V^{-1} U^j
inline Word eta(int n, int i, int j) {
    std::vector<AlgebraElement> f;
    push_vu(f, n);
    if (i > 0) f.push_back({Side::U, ElementFn::power(i)});
    f.push_back({Side::V, ElementFn::power(-1)});
    if (j > 0) f.push_back({Side::U, ElementFn::power(j)});
    return Word::from_factors(std::move(f));
}

} // namespace words

// ---------------------------------------------------------------------------
// The free pair (U, V) as a computable model
// ---------------------------------------------------------------------------

// Holds the engine over one scalar kind plus the scalar constants every
// identity needs. Oracles are either quadrature measures (float kinds) or
// closed-form moment tables (exact rational kind).
template <class S>
struct PairModel {
    S lambda, alpha, sigma, theta;
    std::unique_ptr<FreePairEngine<S>> engine;
    S C1;  // phi(V^{-1})
    S F;   // phi((I-U)^{-1})
    S H;   // phi((I-U)^{-2})

    S word(const Word& w) { return engine->word_moment(w); }

    TruncatedSeries<S> series_of(int order, const std::function<Word(int)>& word_at) {
        TruncatedSeries<S> s(order);
        for (int n = 0; n <= order; ++n) s[n] = engine->word_moment(word_at(n));
        return s;
    }

    std::vector<S> v_moments(int N) {
        std::vector<S> m;
        m.reserve(static_cast<size_t>(N));
        for (int n = 1; n <= N; ++n) m.push_back(engine->phi(Side::V, ElementFn::power(n)));
        return m;
    }
    std::vector<S> u_moments(int N) {
        std::vector<S> m;
        m.reserve(static_cast<size_t>(N));
        for (int n = 1; n <= N; ++n) m.push_back(engine->phi(Side::U, ElementFn::power(n)));
        return m;
    }
};

// Quadrature-backed model. The engine runs in long double so the order-10
// suites keep ~1e-12 normalized residuals.
inline PairModel<long double> make_pair_model(double sigma, double theta, double alpha,
                                              int nodes = 2048) {
    if (!(theta > 1.0)) throw ThetaNotGreaterThanOne();
    double lambda = sigma + theta;
    if (!(lambda > 1.0) || !(sigma > 0.0)) throw InfeasibleConstants("need sigma > 0 and lambda > 1");
    PairModel<long double> m;
    m.lambda = lambda;
    m.alpha = alpha;
    m.sigma = sigma;
    m.theta = theta;
    auto mu_v = discretize_ld(FreePoissonLaw(lambda, alpha), nodes);
    auto mu_u = discretize_ld(FreeBinomialLaw(sigma, theta), nodes);
    m.engine = std::make_unique<FreePairEngine<long double>>(measure_oracle(std::move(mu_u)),
                                                             measure_oracle(std::move(mu_v)));
    m.C1 = m.engine->phi(Side::V, ElementFn::power(-1));
    m.F = m.engine->phi(Side::U, ElementFn::resolvent_one_minus(1));
    m.H = m.engine->phi(Side::U, ElementFn::resolvent_one_minus(2));
    return m;
}

// Exact-rational model: V-moments from the closed cumulants, U-moments from
// the Cauchy-transform expansion, resolvent values from the closed forms
//   F = 1 + sigma/(theta-1),
//   H = (lambda-1)[(lambda-2)(theta-1) + (lambda-1)]/(theta-1)^3,
//   C1 = 1/(alpha(lambda-1)).
// Every identity residual is exactly zero in this kind.
inline PairModel<Rational> make_pair_model_exact(const Rational& sigma, const Rational& theta,
                                                 const Rational& alpha, int max_order) {
    if (!(theta > 1)) throw ThetaNotGreaterThanOne();
    Rational lambda = sigma + theta;
    if (!(lambda > 1) || !(sigma > 0)) throw InfeasibleConstants("need sigma > 0 and lambda > 1");
    PairModel<Rational> m;
    m.lambda = lambda;
    m.alpha = alpha;
    m.sigma = sigma;
    m.theta = theta;
    m.C1 = Rational(1) / (alpha * (lambda - 1));
    m.F = Rational(1) + sigma / (theta - 1);
    Rational t1 = theta - 1;
    m.H = (lambda - 1) * ((lambda - 2) * t1 + (lambda - 1)) / (t1 * t1 * t1);

    auto vmom = std::make_shared<std::vector<Rational>>(
        free_poisson_moments(lambda, alpha, max_order + 2));
    Rational c1 = m.C1;
    auto phiV = [vmom, c1](const ElementFn& fn) -> Rational {
        if (fn.res != 0) throw OracleFailure("V-side resolvent not supported in exact model");
        if (fn.x_half % 2 != 0) throw OracleFailure("odd half power reached the V oracle");
        int k = fn.x_half / 2;
        if (k == 0) return Rational(1);
        if (k == -1) return c1;
        if (k < -1) throw OracleFailure("V power below -1 in exact model");
        if (k > static_cast<int>(vmom->size())) throw OracleFailure("V moment order exhausted");
        return (*vmom)[static_cast<size_t>(k - 1)];
    };

    auto umom = std::make_shared<std::vector<Rational>>(
        free_binomial_moments(sigma, theta, 2 * max_order + 8));
    Rational F = m.F, H = m.H;
    auto phiU = [umom, F, H](const ElementFn& fn) -> Rational {
        if (fn.x_half % 2 != 0) throw OracleFailure("odd half power reached the U oracle");
        int k = fn.x_half / 2;
        int p = fn.res;
        if (k < 0) throw OracleFailure("negative U power in exact model");
        if (p < 0 || p > 2) throw OracleFailure("U resolvent power outside {0,1,2}");
        auto mom = [&](int q) -> Rational {  // phi(U^q), q >= 0
            if (q == 0) return Rational(1);
            if (q > static_cast<int>(umom->size())) throw OracleFailure("U moment order exhausted");
            return (*umom)[static_cast<size_t>(q - 1)];
        };
        // phi((1-U)^q) for q >= -2 via binomial expansion / closed resolvents
        auto w = [&](int q) -> Rational {
            if (q == -1) return F;
            if (q == -2) return H;
            Rational acc(0), bin(1);
            for (int j = 0; j <= q; ++j) {
                Rational term = bin * mom(j);
                acc += (j % 2 == 0) ? term : -term;
                bin = bin * Rational(q - j) / Rational(j + 1);
            }
            return acc;
        };
        // U^k = (1 - (1-U))^k
        Rational acc(0), bin(1);
        for (int i = 0; i <= k; ++i) {
            Rational term = bin * w(i - p);
            acc += (i % 2 == 0) ? term : -term;
            bin = bin * Rational(k - i) / Rational(i + 1);
        }
        return acc;
    };

    m.engine = std::make_unique<FreePairEngine<Rational>>(phiU, phiV);
    return m;
}

// ---------------------------------------------------------------------------
// Shared series for the two identity suites
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
struct SuiteSeries {
    TruncatedSeries<S> A;     // order N+1
    TruncatedSeries<S> B;     // order N
    TruncatedSeries<S> D;     // order N+1
    TruncatedSeries<S> r;     // r-transform of V from engine moments, order N+2
    TruncatedSeries<S> zD;    // order N+2
    TruncatedSeries<S> rzD;   // r(zD), order N+2
    TruncatedSeries<S> h;     // zD r(zD), order N+2
};

// The moment-to-cumulant recursion cancels catastrophically at high order
// (kappa_n is exponentially smaller than m_n), so the float instantiation
// runs it in quad precision; the exact kind keeps its own arithmetic.
template <class S>
TruncatedSeries<S> r_series_from_moments(const std::vector<S>& m) {
    if constexpr (is_exact_scalar_v<S>) {
        return r_from_moments(m).s;
    } else {
        std::vector<__float128> lifted(m.begin(), m.end());
        auto kappa = cumulants_from_moments(lifted);
        TruncatedSeries<S> r(static_cast<int>(kappa.size()) - 1);
        for (size_t i = 0; i < kappa.size(); ++i) r[static_cast<int>(i)] = static_cast<S>(kappa[i]);
        return r;
    }
}

template <class S>
SuiteSeries<S> build_suite(PairModel<S>& m, int N) {
    SuiteSeries<S> s;
    s.A = m.series_of(N + 1, [](int n) { return words::vu(n); });
    s.B = m.series_of(N, [](int n) { return words::v_vu(n); });
    s.D = m.series_of(N + 1, [](int n) { return words::u_vu(n); });
    s.r = r_series_from_moments(m.v_moments(N + 3));
    s.zD = shifted_up(truncated(s.D, N + 1));
    s.rzD = compose(truncated(s.r, N + 2), s.zD);
    s.h = s.zD * s.rzD;
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// First characterization identity suite (mean and inverse-mean regressions)
// ---------------------------------------------------------------------------

// Residuals of every displayed identity in the first characterization's
// proof, evaluated on the forward model at truncation order N. A perturbed
// model (theta + 0.1 with stale constants) supplies the negative control.
template <class S>
IdentityReport verify_identities_thm1(PairModel<S>& m, int N, double tol,
                                      double neg_threshold = 1e-3,
                                      PairModel<S>* perturbed = nullptr) {
    IdentityReport rep;
    const S one(1);
    const S c = m.theta * m.alpha;
    const S d = one / (m.alpha * (m.theta - one));
    auto s = detail::build_suite(m, N);

    // var1: beta_n - alpha_{n+1} = c alpha_n  (sequence form)
    {
        TruncatedSeries<S> lhs(N), rhs(N);
        for (int n = 0; n <= N; ++n) {
            lhs[n] = s.B[n] - s.A[n + 1];
            rhs[n] = c * s.A[n];
        }
        detail::add_series_check(rep, "var1", lhs, rhs, tol);
    }
    // var2 / G1: z sum_{i>=1} G_i(z) = d (A - 1)
    {
        TruncatedSeries<S> w2 = m.series_of(N, [](int n) { return words::ures_vu(n); });
        TruncatedSeries<S> lhs = shifted_up(truncated(w2, N - 1));
        TruncatedSeries<S> rhs = d * (truncated(s.A, N) - TruncatedSeries<S>::constant(one, N));
        detail::add_series_check(rep, "var2_g1", lhs, rhs, tol);
    }
    // eq_first: B - (A-1)/z = c A
    {
        TruncatedSeries<S> am1 = s.A;
        am1[0] -= one;
        TruncatedSeries<S> lhs = truncated(s.B, N) - truncated(shifted_down(am1), N);
        detail::add_series_check(rep, "eq_first", lhs, c * truncated(s.A, N), tol);
    }
    // ab: A = 1 + h and B = r(zD)(1 + h)
    detail::add_series_check(rep, "ab_A", truncated(s.A, N),
                             TruncatedSeries<S>::constant(one, N) + truncated(s.h, N), tol);
    detail::add_series_check(rep, "ab_B", truncated(s.B, N),
                             truncated(s.rzD * (TruncatedSeries<S>::constant(one, N + 2) + s.h), N),
                             tol);

    TruncatedSeries<S> gamma = m.series_of(N + 1, [](int n) { return words::res_vu(n); });
    // gammaf: (Gamma - F) = z r(zD) (Gamma - A)
    {
        TruncatedSeries<S> lhs = truncated(gamma, N);
        lhs[0] -= m.F;
        TruncatedSeries<S> rhs =
            truncated(shifted_up(truncated(s.rzD * (gamma - s.A), N - 1)), N);
        detail::add_series_check(rep, "gammaf", lhs, rhs, tol);
    }
    // Gam: Gamma (z r(zD) - 1) = z r(zD) A - F
    {
        TruncatedSeries<S> zr = shifted_up(truncated(s.rzD, N));
        TruncatedSeries<S> lhs = truncated(gamma, N + 1) * (zr - TruncatedSeries<S>::constant(one, N + 1));
        TruncatedSeries<S> rhs = zr * truncated(s.A, N + 1);
        rhs[0] -= m.F;
        detail::add_series_check(rep, "Gam", truncated(lhs, N), truncated(rhs, N), tol);
    }
    // fin_form: z(A - F) = d (A - 1)(z r(zD) - 1)
    {
        TruncatedSeries<S> amF = truncated(s.A, N);
        amF[0] -= m.F;
        TruncatedSeries<S> lhs = truncated(shifted_up(truncated(amF, N - 1)), N);
        TruncatedSeries<S> am1 = truncated(s.A, N);
        am1[0] -= one;
        TruncatedSeries<S> zr = shifted_up(truncated(s.rzD, N - 1));
        TruncatedSeries<S> rhs = d * (am1 * (zr - TruncatedSeries<S>::constant(one, N)));
        detail::add_series_check(rep, "fin_form", lhs, rhs, tol);
    }
    // hDel2 (system): zD (h + 1 - F) = d h (h - D) and h^2 + h = h D + c(h+1) zD
    {
        TruncatedSeries<S> hp = truncated(s.h, N) + TruncatedSeries<S>::constant(one - m.F, N);
        TruncatedSeries<S> lhs1 = truncated(s.zD, N) * hp;
        TruncatedSeries<S> rhs1 = d * (truncated(s.h, N) * (truncated(s.h, N) - truncated(s.D, N)));
        detail::add_series_check(rep, "hDel2", lhs1, rhs1, tol);

        TruncatedSeries<S> h_N = truncated(s.h, N);
        TruncatedSeries<S> lhs2 = h_N * h_N + h_N;
        TruncatedSeries<S> rhs2 = h_N * truncated(s.D, N) +
                                  c * ((h_N + TruncatedSeries<S>::constant(one, N)) * truncated(s.zD, N));
        detail::add_series_check(rep, "hDel2_second", lhs2, rhs2, tol);
    }
    // hD2: h (1 - zD(c - 1/d)) = zD ((F-1)/d + c)
    {
        S cm = c - one / d;
        S num = (m.F - one) / d + c;
        TruncatedSeries<S> lhs = truncated(s.h, N) *
            (TruncatedSeries<S>::constant(one, N) - cm * truncated(s.zD, N));
        TruncatedSeries<S> rhs = num * truncated(s.zD, N);
        detail::add_series_check(rep, "hD2", lhs, rhs, tol);
    }
    // r2: r(z)(1 - z(c - 1/d)) = (F-1)/d + c, i.e. r is the free-Poisson
    // r-transform with alpha = c - 1/d and lambda alpha = (F-1)/d + c
    {
        S cm = c - one / d;
        S num = (m.F - one) / d + c;
        TruncatedSeries<S> fac(N);
        fac[0] = one;
        if (N >= 1) fac[1] = -cm;
        TruncatedSeries<S> lhs = truncated(s.r, N) * fac;
        detail::add_series_check(rep, "r2", lhs, TruncatedSeries<S>::constant(num, N), tol);
    }
    // S_{UV} = F / (alpha ((1-lambda)(1-F) + z F))
    {
        std::vector<S> mom;
        for (int n = 1; n <= N + 1; ++n) mom.push_back(s.A[n]);
        auto suv = s_from_moment_series(moment_series_from_moments(mom));
        int K = suv.s.order();
        S a0 = (one - m.lambda) * (one - m.F);
        TruncatedSeries<S> den(K);
        den[0] = m.alpha * a0;
        if (K >= 1) den[1] = m.alpha * m.F;
        TruncatedSeries<S> closed = TruncatedSeries<S>::constant(m.F, K) / den;
        detail::add_series_check(rep, "S_UV", suv.s, closed, tol);
    }
    // S_U from the U moments matches 1 + (F+lambda-1)/((1-lambda)(1-F) + F z)
    {
        auto su = s_from_moment_series(moment_series_from_moments(m.u_moments(N + 1)));
        int K = su.s.order();
        S a0 = (one - m.lambda) * (one - m.F);
        TruncatedSeries<S> den(K);
        den[0] = a0;
        if (K >= 1) den[1] = m.F;
        TruncatedSeries<S> closed = TruncatedSeries<S>::constant(one, K) +
                                    TruncatedSeries<S>::constant(m.F + m.lambda - one, K) / den;
        detail::add_series_check(rep, "S_U", su.s, closed, tol);
    }
    // G_U loop closure: the binomial moments at the solved (sigma, theta)
    // reproduce the engine's U moments.
    {
        S cd1 = c * d - one;
        S sigma_solved = (m.F - one) / cd1;
        S theta_solved = one + one / cd1;
        auto closed = free_binomial_moments(sigma_solved, theta_solved, N);
        auto eng = m.u_moments(N);
        TruncatedSeries<S> lhs(N - 1), rhs(N - 1);
        for (int n = 0; n < N; ++n) {
            lhs[n] = closed[static_cast<size_t>(n)];
            rhs[n] = eng[static_cast<size_t>(n)];
        }
        detail::add_series_check(rep, "G_U_moments", lhs, rhs, tol);
    }
    // F and x_plus closed forms
    detail::add_scalar_check(rep, "F_closed", m.F,
                             static_cast<S>(one + m.sigma / (m.theta - one)), tol);
    {
        double cdot = to_double(c) * to_double(d);
        double Fd = to_double(m.F);
        double xp = std::pow(std::sqrt(cdot * (cdot - 1.0)) + std::sqrt(Fd * (Fd - 1.0)), 2) /
                    std::pow(Fd + cdot - 1.0, 2);
        FreeBinomialLaw law(to_double(m.sigma), to_double(m.theta));
        detail::add_scalar_check(rep, "x_plus_formula", xp, law.x_plus(), std::max(tol, 1e-10));
    }
    if (perturbed) {
        IdentityReport sub;
        auto ps = detail::build_suite(*perturbed, std::min(N, 4));
        TruncatedSeries<S> am1 = ps.A;
        am1[0] -= one;
        int K = std::min(N, 4);
        TruncatedSeries<S> lhs = truncated(ps.B, K) - truncated(shifted_down(am1), K);
        detail::add_series_check(sub, "x", lhs, c * truncated(ps.A, K), tol);
        detail::add_negative_control(rep, "negative_control_eq_first", sub.checks[0].normalized,
                                     neg_threshold);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Second characterization identity suite (two inverse-moment regressions)
// ---------------------------------------------------------------------------

template <class S>
IdentityReport verify_identities_thm2(PairModel<S>& m, int N, double tol,
                                      double neg_threshold = 1e-3,
                                      PairModel<S>* perturbed = nullptr) {
    IdentityReport rep;
    const S one(1);
    const S tm1 = m.theta - one;
    const S c = one / (m.alpha * tm1);
    const S d = m.theta / (m.alpha * m.alpha * tm1 * tm1 * tm1);
    auto s = detail::build_suite(m, N);

    // C(z) via the inverse-element cumulant recursion, plus the engine's own
    // kappa(V^{-1}, V, .., V) as a cross-check.
    auto C = inverse_mixed_cumulants(truncated(s.r, N + 2), m.C1, N + 3);
    {
        TruncatedSeries<S> lhs(N), rhs(N);
        for (int n = 1; n <= N + 1 && n - 1 <= N; ++n) {
            std::vector<ElementFn> fns(1, ElementFn::power(-1));
            for (int k = 1; k < n; ++k) fns.push_back(ElementFn::power(1));
            if (n - 1 <= N) {
                lhs[n - 1] = C.values[static_cast<size_t>(n - 1)];
                rhs[n - 1] = m.engine->tag_cumulant(Side::V, std::move(fns));
            }
        }
        detail::add_series_check(rep, "lemma_C_vs_engine", lhs, rhs, tol);
    }

    // var2 with constant c (the first T2 regression): z sum_{i>=1} G_i = c (A-1)
    {
        TruncatedSeries<S> w2 = m.series_of(N, [](int n) { return words::ures_vu(n); });
        TruncatedSeries<S> lhs = shifted_up(truncated(w2, N - 1));
        TruncatedSeries<S> rhs = c * (truncated(s.A, N) - TruncatedSeries<S>::constant(one, N));
        detail::add_series_check(rep, "var2_c", lhs, rhs, tol);
    }
    // fin_form with d replaced by c
    {
        TruncatedSeries<S> amF = truncated(s.A, N);
        amF[0] -= m.F;
        TruncatedSeries<S> lhs = truncated(shifted_up(truncated(amF, N - 1)), N);
        TruncatedSeries<S> am1 = truncated(s.A, N);
        am1[0] -= one;
        TruncatedSeries<S> zr = shifted_up(truncated(s.rzD, N - 1));
        TruncatedSeries<S> rhs = c * (am1 * (zr - TruncatedSeries<S>::constant(one, N)));
        detail::add_series_check(rep, "fin_form_c", lhs, rhs, tol);
    }
    // var21 / fineq21: z * series{phi((VU)^n (I-U)^{-1} V^{-1} U (I-U)^{-1})} = d (A - 1)
    {
        TruncatedSeries<S> T = m.series_of(N - 1, [](int n) { return words::vu_res_vinv_ures(n); });
        TruncatedSeries<S> lhs = shifted_up(T);
        TruncatedSeries<S> rhs = d * (truncated(s.A, N) - TruncatedSeries<S>::constant(one, N));
        detail::add_series_check(rep, "var21_fineq21", lhs, rhs, tol);
    }

    TruncatedSeries<S> gamma = m.series_of(N + 1, [](int n) { return words::res_vu(n); });
    TruncatedSeries<S> Q = m.series_of(N, [](int n) { return words::vu_res_vinv(n); });
    TruncatedSeries<S> P = m.series_of(N, [](int n) { return words::vu_res_vinv_res(n); });

    // N_{i,0} relation: Q = C1 F + z (Gamma - A)
    {
        TruncatedSeries<S> rhs = truncated(shifted_up(truncated(gamma - s.A, N - 1)), N);
        rhs[0] += m.C1 * m.F;
        detail::add_series_check(rep, "n_i0", Q, rhs, tol);
    }
    // sum_nij: (1 - z r(zD)) P = -z r(zD) Q + ((Gamma - A)/D)(C(zD) - C1) F + C1 H
    {
        TruncatedSeries<S> zr = shifted_up(truncated(s.rzD, N - 1));
        TruncatedSeries<S> lhs = (TruncatedSeries<S>::constant(one, N) - zr) * P;
        TruncatedSeries<S> CzD = compose(zero_extended(C.series, N + 2), s.zD);
        TruncatedSeries<S> gfrac = (truncated(gamma, N) - truncated(s.A, N)) / truncated(s.D, N);
        TruncatedSeries<S> rhs = -(zr * Q) +
            m.F * (gfrac * (truncated(CzD, N) - TruncatedSeries<S>::constant(m.C1, N)));
        rhs[0] += m.C1 * m.H;
        detail::add_series_check(rep, "sum_nij", lhs, rhs, tol);
    }
    // etarek: the eta recursion at a grid of (n, i, j)
    {
        double resid = 0, scale = 1;
        int nmax = std::min(N - 1, 4);
        auto Rk = [&](int k) { return s.r[k - 1]; };
        for (int n = 1; n <= nmax; ++n)
            for (int i = 0; i <= 2; ++i)
                for (int j = 0; j <= 2; ++j) {
                    S lhs = m.word(words::eta(n, i, j));
                    S acc(0);
                    // sum_l R_l sum_{k_1+..+k_l=n-l} eta_{k_1,i,j+1} delta_{k_2}..delta_{k_l}
                    std::function<void(int, int, S, bool)> comp = [&](int l, int rem, S prod,
                                                                      bool first) {
                        if (l == 0) {
                            if (rem == 0) acc += prod;
                            return;
                        }
                        for (int k = 0; k <= rem; ++k) {
                            S factor = first ? m.word(words::eta(k, i, j + 1))
                                             : s.D[k];
                            comp(l - 1, rem - k, prod * factor, false);
                        }
                    };
                    for (int l = 1; l <= n; ++l) comp(l, n - l, Rk(l), true);
                    // + phi(U^j) sum_{l>=2} C_l sum_{k_1+..+k_{l-1}=n-(l-1)} gamma_{i+1,k_1} delta..
                    S phiUj = m.engine->phi(Side::U, ElementFn::power(j));
                    std::function<void(int, int, S, bool)> comp2 = [&](int l, int rem, S prod,
                                                                       bool first) {
                        if (l == 0) {
                            if (rem == 0) acc += prod;
                            return;
                        }
                        for (int k = 0; k <= rem; ++k) {
                            S factor = first ? m.word(words::ui_vu(i + 1, k)) : s.D[k];
                            comp2(l - 1, rem - k, prod * factor, false);
                        }
                    };
                    for (int l = 2; l <= n + 1; ++l)
                        comp2(l - 1, n - (l - 1), phiUj * C.values[static_cast<size_t>(l - 1)], true);
                    resid = std::max(resid, abs_to_double(lhs - acc));
                    scale = std::max({scale, abs_to_double(lhs), abs_to_double(acc)});
                }
        IdentityCheck chk{"etarek", resid, scale, resid / scale, tol, resid / scale <= tol, false};
        rep.checks.push_back(chk);
    }
    // r31: zD (h + 1 - F) = c h (h - D)
    {
        TruncatedSeries<S> hp = truncated(s.h, N) + TruncatedSeries<S>::constant(one - m.F, N);
        TruncatedSeries<S> lhs = truncated(s.zD, N) * hp;
        TruncatedSeries<S> rhs = c * (truncated(s.h, N) * (truncated(s.h, N) - truncated(s.D, N)));
        detail::add_series_check(rep, "r31", lhs, rhs, tol);
    }
    // r32: zD { -c h + c F r(zD) (zD - C1 h)/(1 + h) + d(F-1)/c } = d h (D - h)
    {
        TruncatedSeries<S> onePh = TruncatedSeries<S>::constant(one, N) + truncated(s.h, N);
        TruncatedSeries<S> inner =
            -(c * truncated(s.h, N)) +
            (c * m.F) * (truncated(s.rzD, N) * ((truncated(s.zD, N) - m.C1 * truncated(s.h, N)) / onePh)) +
            TruncatedSeries<S>::constant(d * (m.F - one) / c, N);
        TruncatedSeries<S> lhs = truncated(s.zD, N) * inner;
        TruncatedSeries<S> rhs = d * (truncated(s.h, N) * (truncated(s.D, N) - truncated(s.h, N)));
        detail::add_series_check(rep, "r32", lhs, rhs, tol);
    }
    // hD3: r(zD)(1 - alpha zD) = lambda alpha
    {
        TruncatedSeries<S> lhs = truncated(s.rzD, N) *
            (TruncatedSeries<S>::constant(one, N) - m.alpha * truncated(s.zD, N));
        detail::add_series_check(rep, "hD3", lhs,
                                 TruncatedSeries<S>::constant(m.lambda * m.alpha, N), tol);
    }
    // scalar relations
    detail::add_scalar_check(rep, "c_C1F", c, static_cast<S>(m.C1 * m.F), tol);
    detail::add_scalar_check(rep, "C1_HF", static_cast<S>(m.C1 * (m.H - m.F)),
                             static_cast<S>(d * (m.F - one) / c), tol);
    {
        double dd = to_double(d), cc = to_double(c), Fd = to_double(m.F);
        double dc = dd - cc * cc;
        double xp = std::pow(std::sqrt(dd * dc) + std::sqrt(cc * cc * cc * cc * Fd * (Fd - 1.0)), 2) /
                    std::pow(dd + cc * cc * (Fd - 1.0), 2);
        FreeBinomialLaw law(to_double(m.sigma), to_double(m.theta));
        detail::add_scalar_check(rep, "x_plus_formula", xp, law.x_plus(), std::max(tol, 1e-10));
    }
    if (perturbed) {
        int K = std::min(N, 3);
        TruncatedSeries<S> T =
            perturbed->series_of(K, [](int n) { return words::vu_res_vinv_ures(n); });
        TruncatedSeries<S> pa = perturbed->series_of(K + 1, [](int n) { return words::vu(n); });
        TruncatedSeries<S> lhs = shifted_up(truncated(T, K - 1));
        TruncatedSeries<S> rhs = d * (truncated(pa, K) - TruncatedSeries<S>::constant(one, K));
        IdentityReport sub;
        detail::add_series_check(sub, "x", lhs, rhs, tol);
        detail::add_negative_control(rep, "negative_control_var21", sub.checks[0].normalized,
                                     neg_threshold);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Proposition 3.1: X and Y are free and free-Poisson
// ---------------------------------------------------------------------------

// Joint-moment oracle for tuples over {X, Y} with X = V^{1/2} U V^{1/2},
// Y = V - X, expanded into engine words.
template <class S>
class XYOracle {
  public:
    explicit XYOracle(PairModel<S>& m) : m_(m) {}

    // pattern[i]: 0 for X, 1 for Y
    S joint_moment(const std::vector<int>& pattern) {
        auto it = memo_.find(pattern);
        if (it != memo_.end()) return it->second;
        S acc(0);
        int nY = 0;
        for (int p : pattern)
            if (p == 1) ++nY;
        for (int mask = 0; mask < (1 << nY); ++mask) {
            std::vector<AlgebraElement> f;
            int yidx = 0;
            int signs = 0;
            for (int p : pattern) {
                bool asX;
                if (p == 0) {
                    asX = true;
                } else {
                    bool pickV = (mask >> yidx) & 1;
                    ++yidx;
                    asX = !pickV;
                    if (asX) ++signs;  // Y contributes -X
                }
                if (asX) {
                    f.push_back({Side::V, ElementFn::half_power(1)});
                    f.push_back({Side::U, ElementFn::power(1)});
                    f.push_back({Side::V, ElementFn::half_power(1)});
                } else {
                    f.push_back({Side::V, ElementFn::power(1)});
                }
            }
            S term = m_.word(Word::from_factors(std::move(f)));
            acc += (signs % 2 == 0) ? term : -term;
        }
        memo_.emplace(pattern, acc);
        return acc;
    }

  private:
    PairModel<S>& m_;
    std::map<std::vector<int>, S> memo_;
};

// Checks (i) X-moments equal nu(sigma, alpha) via both the transform route
// and the word engine, (ii) Y-moments equal nu(theta, alpha), (iii) mixed
// (X, Y) free cumulants vanish to total order K, (iv) the r-transforms add
// back to V's.
template <class S>
IdentityReport verify_prop31(PairModel<S>& m, int K, double tol_moments, double tol_mixed) {
    IdentityReport rep;
    const int N = std::max(K + 2, 8);
    XYOracle<S> xy(m);

    auto nu_sigma = free_poisson_moments(m.sigma, m.alpha, N);
    auto nu_theta = free_poisson_moments(m.theta, m.alpha, N);

    // (i) X-moments: word engine route
    {
        TruncatedSeries<S> lhs(N - 1), rhs(N - 1);
        for (int n = 1; n <= N; ++n) {
            lhs[n - 1] = m.word(words::vu(n));
            rhs[n - 1] = nu_sigma[static_cast<size_t>(n - 1)];
        }
        detail::add_series_check(rep, "x_moments_words", lhs, rhs, tol_moments);
    }
    // (i) X-moments: free multiplicative convolution route
    {
        auto sv = s_from_moment_series(moment_series_from_moments(m.v_moments(N + 2)));
        auto su = s_from_moment_series(moment_series_from_moments(m.u_moments(N + 2)));
        auto prod = free_mult(su, sv, N);
        TruncatedSeries<S> lhs(N - 1), rhs(N - 1);
        for (int n = 1; n <= N; ++n) {
            lhs[n - 1] = prod.s[n];
            rhs[n - 1] = nu_sigma[static_cast<size_t>(n - 1)];
        }
        detail::add_series_check(rep, "x_moments_free_mult", lhs, rhs, tol_moments);
    }
    // (ii) Y-moments via the expansion oracle
    {
        TruncatedSeries<S> lhs(N - 1), rhs(N - 1);
        for (int n = 1; n <= N; ++n) {
            lhs[n - 1] = xy.joint_moment(std::vector<int>(static_cast<size_t>(n), 1));
            rhs[n - 1] = nu_theta[static_cast<size_t>(n - 1)];
        }
        detail::add_series_check(rep, "y_moments", lhs, rhs, tol_moments);
    }
    // (iii) mixed cumulants vanish
    {
        double resid = 0;
        for (int n = 2; n <= K; ++n) {
            for (int mask = 1; mask < (1 << n) - 1; ++mask) {
                std::vector<int> pattern(static_cast<size_t>(n));
                for (int i = 0; i < n; ++i) pattern[static_cast<size_t>(i)] = (mask >> i) & 1;
                auto oracle = [&](const std::vector<int>& idx) {
                    std::vector<int> sub;
                    sub.reserve(idx.size());
                    for (int i : idx) sub.push_back(pattern[static_cast<size_t>(i)]);
                    return xy.joint_moment(sub);
                };
                resid = std::max(resid, std::abs(to_double(joint_cumulant<S>(n, oracle))));
            }
        }
        IdentityCheck chk{"mixed_cumulants", resid, 1.0, resid, tol_mixed, resid <= tol_mixed, false};
        rep.checks.push_back(chk);
    }
    // (iv) r_X + r_Y = r_V coefficientwise
    {
        std::vector<S> xm, ym;
        for (int n = 1; n <= K + 2; ++n) {
            xm.push_back(m.word(words::vu(n)));
            ym.push_back(xy.joint_moment(std::vector<int>(static_cast<size_t>(n), 1)));
        }
        auto rx = r_from_moments(xm);
        auto ry = r_from_moments(ym);
        auto rv = r_from_moments(m.v_moments(K + 2));
        detail::add_series_check(rep, "free_add_recovers_V", free_add(rx, ry).s, rv.s, tol_moments);
    }
    // X follows nu(sigma, alpha), not nu(theta, alpha): law labels matter
    // whenever sigma != theta.
    if (m.sigma != m.theta) {
        double sep = 0;
        for (int n = 1; n <= N; ++n)
            sep = std::max(sep, std::abs(to_double(nu_sigma[static_cast<size_t>(n - 1)] -
                                                   nu_theta[static_cast<size_t>(n - 1)])));
        double x1 = std::abs(to_double(m.word(words::vu(1)) - nu_theta[0]));
        IdentityCheck chk{"x_law_distinguishes_parameters", x1, 1.0, x1, 0.0,
                          sep > 0 ? x1 > 1e-6 : true, true};
        rep.checks.push_back(chk);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Regression-constant and inverse-element-cumulant verification targets
// ---------------------------------------------------------------------------

inline IdentityReport verify_prop32(double sigma, double theta, double alpha, int n_max,
                                    double tol, int nodes = 2048) {
    IdentityReport rep;
    auto model = make_pair_model(sigma, theta, alpha, nodes);
    using S = long double;
    const S one(1);
    auto [c1t, d1t] = regression_constants(sigma, theta, alpha, Theorem::T1);
    auto [c2t, d2t] = regression_constants(sigma, theta, alpha, Theorem::T2);
    const S c1 = c1t, d1 = d1t, c2 = c2t, d2 = d2t;

    auto A = model.series_of(n_max + 1, [](int n) { return words::vu(n); });
    auto B = model.series_of(n_max, [](int n) { return words::v_vu(n); });
    {
        TruncatedSeries<S> lhs(n_max), rhs(n_max);
        for (int n = 0; n <= n_max; ++n) {
            lhs[n] = B[n] - A[n + 1];
            rhs[n] = c1 * A[n];
        }
        detail::add_series_check(rep, "mean_regression", lhs, rhs, tol);
    }
    {
        auto W2 = model.series_of(n_max, [](int n) { return words::ures_vu(n); });
        TruncatedSeries<S> lhs = shifted_up(truncated(W2, n_max - 1));
        TruncatedSeries<S> rhs = d1 * (truncated(A, n_max) - TruncatedSeries<S>::constant(one, n_max));
        detail::add_series_check(rep, "inverse_regression", lhs, rhs, tol);
    }
    {
        auto T = model.series_of(n_max - 1, [](int n) { return words::vu_res_vinv_ures(n); });
        TruncatedSeries<S> lhs = shifted_up(T);
        TruncatedSeries<S> rhs = d2 * (truncated(A, n_max) - TruncatedSeries<S>::constant(one, n_max));
        detail::add_series_check(rep, "second_inverse_regression", lhs, rhs, tol);
    }
    // closed forms of the constants against the quadrature of nu(theta, alpha)
    {
        auto nm = negative_moments(FreePoissonLaw(theta, alpha), nodes);
        detail::add_scalar_check(rep, "phi_inv_closed", nm.phi_inv, static_cast<double>(c2), tol);
        detail::add_scalar_check(rep, "phi_inv2_closed", nm.phi_inv2, static_cast<double>(d2), tol);
    }
    return rep;
}

inline IdentityReport verify_lemma33(double lambda, double alpha, int N, double tol,
                                     int nodes = 2048) {
    IdentityReport rep;
    if (!(lambda > 1.0)) throw AtomAtZero("lemma requires invertible V, need rate > 1");
    using S = long double;
    auto mu_v = discretize_ld(FreePoissonLaw(lambda, alpha), nodes);
    FreePairEngine<S> engine(
        [](const ElementFn&) -> S { throw OracleFailure("no U side in this model"); },
        measure_oracle(mu_v));
    std::vector<S> vm;
    for (int n = 1; n <= N + 2; ++n) vm.push_back(engine.phi(Side::V, ElementFn::power(n)));
    S c1 = engine.phi(Side::V, ElementFn::power(-1));
    detail::add_scalar_check(rep, "C1_closed", static_cast<S>(1.0L / (alpha * (lambda - 1.0))), c1,
                             tol);
    auto r = r_from_moments(vm);
    auto C = inverse_mixed_cumulants(r.s, c1, N);
    {
        TruncatedSeries<S> vals(N - 1), ser(N - 1);
        for (int n = 1; n <= N - 1; ++n) {
            vals[n - 1] = C.values[static_cast<size_t>(n - 1)];
            ser[n - 1] = C.series[n - 1];
        }
        detail::add_series_check(rep, "recursion_vs_series", vals, ser, tol);
    }
    {
        TruncatedSeries<S> lhs(N - 1), rhs(N - 1);
        for (int n = 1; n <= N - 1; ++n) {
            std::vector<ElementFn> fns(1, ElementFn::power(-1));
            for (int k = 1; k < n; ++k) fns.push_back(ElementFn::power(1));
            lhs[n - 1] = C.values[static_cast<size_t>(n - 1)];
            rhs[n - 1] = engine.tag_cumulant(Side::V, std::move(fns));
        }
        detail::add_series_check(rep, "recursion_vs_joint_cumulant", lhs, rhs, tol);
    }
    return rep;
}

} // namespace freeprob

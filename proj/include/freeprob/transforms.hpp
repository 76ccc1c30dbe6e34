#pragma once

#include "freeprob/errors.hpp"
#include "freeprob/freemoments.hpp"
#include "freeprob/series.hpp"

#include <vector>

namespace freeprob {

// r(z) = sum_n R_{n+1} z^n; coefficient n holds the cumulant of order n+1.
template <class S>
struct RTransform {
    TruncatedSeries<S> s;
    int order() const { return s.order(); }
};

// Expansion of S at 0; defined only for nonzero mean.
template <class S>
struct STransform {
    TruncatedSeries<S> s;
    int order() const { return s.order(); }
};

// Coefficient n is phi(X^n); constant term 1.
template <class S>
struct MomentSeries {
    TruncatedSeries<S> s;
    int order() const { return s.order(); }

    std::vector<S> moments(int n_max) const {
        std::vector<S> m;
        m.reserve(static_cast<size_t>(n_max));
        for (int n = 1; n <= n_max; ++n) m.push_back(s[n]);
        return m;
    }
};

template <class S>
RTransform<S> r_from_cumulants(const std::vector<S>& kappa) {
    TruncatedSeries<S> s(static_cast<int>(kappa.size()) - 1);
    for (size_t i = 0; i < kappa.size(); ++i) s[static_cast<int>(i)] = kappa[i];
    return {s};
}

template <class S>
MomentSeries<S> moment_series_from_moments(const std::vector<S>& m) {
    TruncatedSeries<S> s(static_cast<int>(m.size()));
    s[0] = S(1);
    for (size_t i = 0; i < m.size(); ++i) s[static_cast<int>(i) + 1] = m[i];
    return {s};
}

template <class S>
RTransform<S> r_from_moments(const std::vector<S>& m) {
    return r_from_cumulants(cumulants_from_moments(m));
}

// Free additive convolution: cumulants add.
template <class S>
RTransform<S> free_add(const RTransform<S>& a, const RTransform<S>& b) {
    return {a.s + b.s};
}

// S(z) = R^{<-1>}(z) / z with R(z) = z r(z); requires R_1 != 0.
template <class S>
STransform<S> s_from_r(const RTransform<S>& a) {
    if (a.s[0] == S(0)) throw ZeroMean();
    TruncatedSeries<S> R = shifted_up(a.s);
    TruncatedSeries<S> Rinv = comp_inverse(R);
    return {shifted_down(Rinv)};
}

template <class S>
STransform<S> s_from_moment_series(const MomentSeries<S>& m) {
    // psi = M - 1 has psi'(0) = m_1; S(z) = (1+z)/z * psi^{<-1>}(z).
    TruncatedSeries<S> psi = m.s - TruncatedSeries<S>::constant(S(1), m.s.order());
    if (psi.order() < 1 || psi[1] == S(0)) throw ZeroMean();
    TruncatedSeries<S> pinv = comp_inverse(psi);
    TruncatedSeries<S> onePlus = TruncatedSeries<S>::identity(psi.order()) +
                                 TruncatedSeries<S>::constant(S(1), psi.order());
    return {onePlus * shifted_down(pinv)};
}

// Free multiplicative convolution at series level: S_ab = S_a S_b, then the
// moment series is recovered from psi(z/(1+z) S_ab(z)) = z by compositional
// inversion.
template <class S>
MomentSeries<S> free_mult(const STransform<S>& a, const STransform<S>& b, int N) {
    TruncatedSeries<S> sab = a.s * b.s;
    if (sab.order() < N - 1)
        throw OrderTooLow("free_mult to order " + std::to_string(N) + " needs S-transforms to order " +
                          std::to_string(N - 1));
    // u(z) = z/(1+z) S_ab(z) has valuation 1, so u to order N only reads
    // S_ab up to order N-1; zero-extension beyond that is inert.
    TruncatedSeries<S> zOver1pz = TruncatedSeries<S>::identity(N) /
                                  (TruncatedSeries<S>::constant(S(1), N) +
                                   TruncatedSeries<S>::identity(N));
    TruncatedSeries<S> u = zOver1pz * zero_extended(truncated(sab, std::min(sab.order(), N - 1)), N);
    TruncatedSeries<S> psi = comp_inverse(u);
    TruncatedSeries<S> M(N);
    M[0] = S(1);
    for (int n = 1; n <= N; ++n) M[n] = psi[n];
    return {M};
}

// Residuals of the Cauchy-transform relation G(r(z) + 1/z) = z, written
// without Laurent terms: with u(z) = z/(1 + z r(z)) and g(z) = z M(z),
// g(u(z)) - z must vanish identically.
template <class S>
std::vector<S> verify_cauchy_relation(const MomentSeries<S>& m, const RTransform<S>& r, int N) {
    TruncatedSeries<S> rz = truncated(r.s, N);
    TruncatedSeries<S> denom = TruncatedSeries<S>::constant(S(1), N + 1) + shifted_up(rz);
    TruncatedSeries<S> u = TruncatedSeries<S>::identity(N + 1) / denom;
    TruncatedSeries<S> g = shifted_up(truncated(m.s, N));
    TruncatedSeries<S> lhs = compose(g, u);
    TruncatedSeries<S> res = lhs - TruncatedSeries<S>::identity(lhs.order());
    std::vector<S> out;
    out.reserve(static_cast<size_t>(res.order()) + 1);
    for (int k = 0; k <= res.order(); ++k) out.push_back(res[k]);
    return out;
}

} // namespace freeprob

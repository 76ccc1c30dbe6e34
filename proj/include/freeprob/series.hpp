#pragma once

#include "freeprob/errors.hpp"
#include "freeprob/scalar.hpp"

#include <algorithm>
#include <initializer_list>
#include <vector>

namespace freeprob {

// Working truncation degree used when a caller has no better-informed order.
inline constexpr int kDefaultSeriesOrder = 16;

// Formal power series truncated at a fixed degree (inclusive). Coefficient k
// of z^k lives at c[k]; order() == c.size()-1. Arithmetic truncates results
// to the smaller operand order. Values are immutable once built; every
// operation returns a fresh series.
template <class S>
struct TruncatedSeries {
    std::vector<S> c;

    TruncatedSeries() : c(1, S(0)) {}
    explicit TruncatedSeries(int order) : c(order >= 0 ? static_cast<size_t>(order) + 1 : 1, S(0)) {}
    TruncatedSeries(std::initializer_list<S> coeffs) : c(coeffs) {
        if (c.empty()) c.push_back(S(0));
    }
    explicit TruncatedSeries(std::vector<S> coeffs) : c(std::move(coeffs)) {
        if (c.empty()) c.push_back(S(0));
    }

    int order() const { return static_cast<int>(c.size()) - 1; }
    const S& operator[](int k) const { return c[static_cast<size_t>(k)]; }
    S& operator[](int k) { return c[static_cast<size_t>(k)]; }

    static TruncatedSeries zero(int order) { return TruncatedSeries(order); }
    static TruncatedSeries constant(const S& v, int order) {
        TruncatedSeries s(order);
        s.c[0] = v;
        return s;
    }
    static TruncatedSeries identity(int order) {
        TruncatedSeries s(order);
        if (order >= 1) s.c[1] = S(1);
        return s;
    }

    bool operator==(const TruncatedSeries& o) const { return c == o.c; }
};

template <class S>
int shared_order(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b) {
    return std::min(a.order(), b.order());
}

template <class S>
TruncatedSeries<S> operator+(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b) {
    int n = shared_order(a, b);
    TruncatedSeries<S> r(n);
    for (int k = 0; k <= n; ++k) r[k] = a[k] + b[k];
    return r;
}

template <class S>
TruncatedSeries<S> operator-(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b) {
    int n = shared_order(a, b);
    TruncatedSeries<S> r(n);
    for (int k = 0; k <= n; ++k) r[k] = a[k] - b[k];
    return r;
}

template <class S>
TruncatedSeries<S> operator-(const TruncatedSeries<S>& a) {
    TruncatedSeries<S> r(a.order());
    for (int k = 0; k <= a.order(); ++k) r[k] = -a[k];
    return r;
}

template <class S>
TruncatedSeries<S> operator*(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b) {
    int n = shared_order(a, b);
    TruncatedSeries<S> r(n);
    for (int i = 0; i <= n; ++i) {
        if (a[i] == S(0)) continue;
        for (int j = 0; i + j <= n; ++j) r[i + j] += a[i] * b[j];
    }
    return r;
}

template <class S>
TruncatedSeries<S> operator*(const S& v, const TruncatedSeries<S>& a) {
    TruncatedSeries<S> r(a.order());
    for (int k = 0; k <= a.order(); ++k) r[k] = v * a[k];
    return r;
}

// Long division a / b; requires b(0) != 0.
template <class S>
TruncatedSeries<S> operator/(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b) {
    if (b[0] == S(0)) throw DivisionByZeroConstantTerm();
    int n = shared_order(a, b);
    TruncatedSeries<S> q(n);
    for (int k = 0; k <= n; ++k) {
        S acc = a[k];
        for (int j = 0; j < k; ++j) acc -= q[j] * b[k - j];
        q[k] = acc / b[0];
    }
    return q;
}

enum class SeriesOp { Add, Sub, Mul, Div };

template <class S>
TruncatedSeries<S> arith(const TruncatedSeries<S>& a, const TruncatedSeries<S>& b, SeriesOp op) {
    switch (op) {
        case SeriesOp::Add: return a + b;
        case SeriesOp::Sub: return a - b;
        case SeriesOp::Mul: return a * b;
        case SeriesOp::Div: return a / b;
    }
    throw Error("unreachable");
}

// f(g(z)) by Horner's scheme; requires g(0) == 0.
template <class S>
TruncatedSeries<S> compose(const TruncatedSeries<S>& f, const TruncatedSeries<S>& g) {
    if (g[0] != S(0)) throw NonzeroConstantInnerTerm();
    int n = shared_order(f, g);
    TruncatedSeries<S> gn(n);
    for (int k = 0; k <= std::min(n, g.order()); ++k) gn[k] = g[k];
    TruncatedSeries<S> acc = TruncatedSeries<S>::constant(f[std::min(f.order(), n)], n);
    for (int k = std::min(f.order(), n) - 1; k >= 0; --k) {
        acc = acc * gn;
        acc[0] += f[k];
    }
    return acc;
}

// Compositional inverse: g with f(g(z)) = z. Requires f(0)=0, f'(0)!=0.
// Solved degree by degree; each new coefficient enters linearly through f'(0).
template <class S>
TruncatedSeries<S> comp_inverse(const TruncatedSeries<S>& f) {
    if (f[0] != S(0)) throw NotInvertible("constant term must vanish");
    if (f.order() < 1 || f[1] == S(0)) throw NotInvertible("linear coefficient must be nonzero");
    int n = f.order();
    TruncatedSeries<S> g(n);
    g[1] = S(1) / f[1];
    for (int m = 2; m <= n; ++m) {
        TruncatedSeries<S> h = compose(f, g);
        S target = (m == 1) ? S(1) : S(0);
        g[m] += (target - h[m]) / f[1];
    }
    return g;
}

// Square root with an explicit hint for sqrt(f(0)); exact in rational kind
// when the hint squares to f(0).
template <class S>
TruncatedSeries<S> series_sqrt(const TruncatedSeries<S>& f, const S& sqrt_c0) {
    if (sqrt_c0 * sqrt_c0 != f[0]) throw NotInvertible("sqrt hint does not square to constant term");
    if (sqrt_c0 == S(0)) throw NotInvertible("sqrt at zero constant term");
    int n = f.order();
    TruncatedSeries<S> g(n);
    g[0] = sqrt_c0;
    for (int m = 1; m <= n; ++m) {
        S acc = f[m];
        for (int j = 1; j < m; ++j) acc -= g[j] * g[m - j];
        g[m] = acc / (S(2) * sqrt_c0);
    }
    return g;
}

// Multiply by z^k (order grows by k).
template <class S>
TruncatedSeries<S> shifted_up(const TruncatedSeries<S>& a, int k = 1) {
    TruncatedSeries<S> r(a.order() + k);
    for (int i = 0; i <= a.order(); ++i) r[i + k] = a[i];
    return r;
}

// Divide by z^k; the low-order coefficients must vanish.
template <class S>
TruncatedSeries<S> shifted_down(const TruncatedSeries<S>& a, int k = 1) {
    for (int i = 0; i < k; ++i)
        if (a[i] != S(0)) throw OrderTooLow("shifted_down on series with nonzero low coefficients");
    TruncatedSeries<S> r(a.order() - k);
    for (int i = 0; i <= r.order(); ++i) r[i] = a[i + k];
    return r;
}

template <class S>
TruncatedSeries<S> truncated(const TruncatedSeries<S>& a, int order) {
    TruncatedSeries<S> r(order);
    for (int i = 0; i <= std::min(order, a.order()); ++i) r[i] = a[i];
    return r;
}

// Extend with zero coefficients; only valid when the tail is known to vanish
// (polynomials, closed-form expansions padded by the caller).
template <class S>
TruncatedSeries<S> zero_extended(const TruncatedSeries<S>& a, int order) {
    if (order <= a.order()) return truncated(a, order);
    TruncatedSeries<S> r(order);
    for (int i = 0; i <= a.order(); ++i) r[i] = a[i];
    return r;
}

template <class S>
TruncatedSeries<double> to_double_series(const TruncatedSeries<S>& a) {
    TruncatedSeries<double> r(a.order());
    for (int i = 0; i <= a.order(); ++i) r[i] = to_double(a[i]);
    return r;
}

template <class S>
double max_abs_coeff(const TruncatedSeries<S>& a) {
    double m = 0;
    for (int i = 0; i <= a.order(); ++i) m = std::max(m, abs_to_double(a[i]));
    return m;
}

} // namespace freeprob

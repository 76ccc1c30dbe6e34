#pragma once

#include "freeprob/errors.hpp"
#include "freeprob/ncpart.hpp"
#include "freeprob/scalar.hpp"
#include "freeprob/series.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace freeprob {

// ---------------------------------------------------------------------------
// Measures and algebra elements
// ---------------------------------------------------------------------------

// Atomic part is exact; the continuous part is a quadrature rule on (lo, hi).
template <class S>
struct SpectralMeasure {
    struct Atom { S x; S mass; };
    struct Node { S x; S w; };
    std::vector<Atom> atoms;
    std::vector<Node> nodes;
    S lo = S(0);
    S hi = S(0);

    S total_mass() const {
        S m(0);
        for (const auto& a : atoms) m += a.mass;
        for (const auto& n : nodes) m += n.w;
        return m;
    }
};

// One formal function of a single variable: x^{x_half/2} * (1-x)^{-res}.
// Products of elements of the same algebra just add exponents.
struct ElementFn {
    int x_half = 0;
    int res = 0;

    static ElementFn power(int k) { return {2 * k, 0}; }
    static ElementFn half_power(int k) { return {k, 0}; }
    static ElementFn resolvent_one_minus(int p) { return {0, p}; }

    ElementFn operator*(const ElementFn& o) const { return {x_half + o.x_half, res + o.res}; }
    bool is_identity() const { return x_half == 0 && res == 0; }
    bool operator==(const ElementFn& o) const { return x_half == o.x_half && res == o.res; }
    bool operator<(const ElementFn& o) const {
        return x_half != o.x_half ? x_half < o.x_half : res < o.res;
    }
};

enum class Side { U, V };

struct AlgebraElement {
    Side side;
    ElementFn fn;
};

// Alternating product of elements from the two algebras. Normalization merges
// same-side neighbours (also across the ends: traces are cyclic) and drops
// identity factors, so V^{1/2} U V^{1/2} and V U denote the same trace.
struct Word {
    std::vector<AlgebraElement> f;

    static Word from_factors(std::vector<AlgebraElement> factors) {
        Word w{std::move(factors)};
        w.normalize();
        return w;
    }

    void normalize() {
        bool changed = true;
        while (changed) {
            changed = false;
            std::vector<AlgebraElement> out;
            for (const auto& e : f) {
                if (e.fn.is_identity()) { changed = true; continue; }
                if (!out.empty() && out.back().side == e.side) {
                    out.back().fn = out.back().fn * e.fn;
                    changed = true;
                } else {
                    out.push_back(e);
                }
            }
            while (out.size() >= 2 && out.front().side == out.back().side) {
                out.front().fn = out.front().fn * out.back().fn;
                out.pop_back();
                changed = true;
            }
            f = std::move(out);
        }
    }
};

// ---------------------------------------------------------------------------
// Single-measure moments
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
S eval_fn_float(const ElementFn& fn, S x) {
    S v(1);
    if (fn.x_half != 0) {
        if (fn.x_half % 2 == 0) {
            v *= static_cast<S>(std::pow(static_cast<long double>(x),
                                         static_cast<long double>(fn.x_half / 2)));
        } else {
            v *= static_cast<S>(std::pow(static_cast<long double>(x),
                                         static_cast<long double>(fn.x_half) / 2.0L));
        }
    }
    if (fn.res != 0) {
        v *= static_cast<S>(std::pow(static_cast<long double>(1) - static_cast<long double>(x),
                                     static_cast<long double>(-fn.res)));
    }
    return v;
}

inline Rational rational_int_pow(const Rational& x, int k) {
    if (k == 0) return Rational(1);
    Rational base = k > 0 ? x : Rational(1) / x;
    int e = k > 0 ? k : -k;
    Rational acc(1);
    for (int i = 0; i < e; ++i) acc *= base;
    return acc;
}

} // namespace detail

// phi(f(X)) for X distributed by mu: exact sum over atoms plus quadrature
// over the continuous nodes. Poles (0 for negative powers, 1 for resolvents)
// must be separated from the support.
template <class S>
S measure_moment(const SpectralMeasure<S>& mu, const ElementFn& fn) {
    const bool needs_inv_x = fn.x_half < 0;
    const bool needs_res = fn.res > 0;
    if constexpr (is_exact_scalar_v<S>) {
        if (fn.x_half % 2 != 0)
            throw SingularIntegrand("half powers are not exact-rational evaluable");
        Rational acc(0);
        for (const auto& a : mu.atoms) {
            if (needs_inv_x && a.x == S(0)) throw SingularIntegrand("atom at pole x=0");
            if (needs_res && a.x == S(1)) throw SingularIntegrand("atom at pole x=1");
            Rational v = detail::rational_int_pow(a.x, fn.x_half / 2);
            if (fn.res != 0) v *= detail::rational_int_pow(Rational(1) - a.x, -fn.res);
            acc += a.mass * v;
        }
        if (!mu.nodes.empty()) throw SingularIntegrand("exact measures carry atoms only");
        return acc;
    } else {
        const long double width = static_cast<long double>(mu.hi - mu.lo);
        const long double margin = 1e-6L * (width > 0 ? width : 1.0L);
        auto guard_pole = [&](long double pole, const char* what) {
            for (const auto& a : mu.atoms)
                if (std::abs(static_cast<long double>(a.x) - pole) < margin)
                    throw SingularIntegrand(what);
            if (!mu.nodes.empty()) {
                long double lo = static_cast<long double>(mu.lo), hi = static_cast<long double>(mu.hi);
                long double dist = pole < lo ? lo - pole : (pole > hi ? pole - hi : 0.0L);
                if (dist < margin) throw SingularIntegrand(what);
            }
        };
        if (needs_inv_x) guard_pole(0.0L, "support touches pole x=0");
        if (needs_res) guard_pole(1.0L, "support touches pole x=1");
        S acc(0);
        for (const auto& a : mu.atoms) acc += a.mass * detail::eval_fn_float(fn, a.x);
        for (const auto& n : mu.nodes) acc += n.w * detail::eval_fn_float(fn, n.x);
        return acc;
    }
}

// ---------------------------------------------------------------------------
// Moment <-> cumulant conversions (single variable)
// ---------------------------------------------------------------------------

// kappa_n = m_n - sum over non-crossing partitions with >1 block of the
// block-size cumulant products (the moment-cumulant relation solved for the
// full-block term).
template <class S>
std::vector<S> cumulants_from_moments(const std::vector<S>& m) {
    int N = static_cast<int>(m.size());
    std::vector<S> kappa;
    kappa.reserve(static_cast<size_t>(N));
    for (int n = 1; n <= N; ++n) {
        S rest(0);
        // partitions with more than one block only touch kappa_1..kappa_{n-1}
        for_each_nc(n, [&](const NonCrossingPartition& p) {
            if (p.blocks.size() <= 1) return;
            S prod(1);
            for (const auto& b : p.blocks) prod *= kappa[b.size() - 1];
            rest += prod;
        });
        kappa.push_back(m[static_cast<size_t>(n - 1)] - rest);
    }
    return kappa;
}

enum class MomentRoute { NcSum, BlsRecursion };

// m_n as the non-crossing partition sum, or via the boundary-point recursion
// m_n = sum_k kappa_k * [z^{n-k}] M(z)^k with m_0 = 1; both agree exactly.
template <class S>
std::vector<S> moments_from_cumulants(const std::vector<S>& kappa,
                                      MomentRoute route = MomentRoute::BlsRecursion) {
    int N = static_cast<int>(kappa.size());
    std::vector<S> m;
    m.reserve(static_cast<size_t>(N));
    if (route == MomentRoute::NcSum) {
        for (int n = 1; n <= N; ++n) {
            S acc(0);
            for_each_nc(n, [&](const NonCrossingPartition& p) {
                S prod(1);
                for (const auto& b : p.blocks) prod *= kappa[b.size() - 1];
                acc += prod;
            });
            m.push_back(acc);
        }
        return m;
    }
    // mfull[0] = 1, mfull[k] = m_k. pw[j] = [z^j] M(z)^k, rebuilt per k.
    std::vector<S> mfull(1, S(1));
    for (int n = 1; n <= N; ++n) {
        S acc(0);
        for (int k = 1; k <= n; ++k) {
            // coefficient of z^{n-k} in M(z)^k, degrees < n already known
            std::vector<S> pw(static_cast<size_t>(n - k) + 1, S(0));
            pw[0] = S(1);
            for (int rep = 0; rep < k; ++rep) {
                std::vector<S> nxt(pw.size(), S(0));
                for (size_t i = 0; i < pw.size(); ++i) {
                    if (pw[i] == S(0)) continue;
                    for (size_t j = 0; i + j < nxt.size(); ++j) nxt[i + j] += pw[i] * mfull[j];
                }
                pw = std::move(nxt);
            }
            acc += kappa[static_cast<size_t>(k - 1)] * pw[static_cast<size_t>(n - k)];
        }
        m.push_back(acc);
        mfull.push_back(acc);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Joint cumulants from an ordered-moment oracle
// ---------------------------------------------------------------------------

// kappa(a_1..a_n) = phi(a_1..a_n) - sum over proper non-crossing partitions
// of products of block cumulants; the oracle supplies phi of any ordered
// sub-tuple (indices into the original tuple).
template <class S>
class JointCumulant {
  public:
    using Oracle = std::function<S(const std::vector<int>&)>;

    explicit JointCumulant(Oracle oracle) : oracle_(std::move(oracle)) {}

    S of(const std::vector<int>& idx) {
        auto it = memo_.find(idx);
        if (it != memo_.end()) return it->second;
        S val = oracle_(idx);
        if (idx.size() > 1) {
            int n = static_cast<int>(idx.size());
            S rest(0);
            for_each_nc(n, [&](const NonCrossingPartition& p) {
                if (p.blocks.size() <= 1) return;
                S prod(1);
                for (const auto& b : p.blocks) {
                    std::vector<int> sub;
                    sub.reserve(b.size());
                    for (int e : b) sub.push_back(idx[static_cast<size_t>(e - 1)]);
                    prod *= of(sub);
                }
                rest += prod;
            });
            val -= rest;
        }
        memo_.emplace(idx, val);
        return val;
    }

  private:
    Oracle oracle_;
    std::map<std::vector<int>, S> memo_;
};

template <class S>
S joint_cumulant(int n, const typename JointCumulant<S>::Oracle& oracle) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    JointCumulant<S> jc(oracle);
    return jc.of(idx);
}

// ---------------------------------------------------------------------------
// Free pair engine: traces of words in two free algebras
// ---------------------------------------------------------------------------

inline constexpr int kWordRecursionCeiling = 26;
inline constexpr int kWordNcCeiling = 12;

// Evaluates phi(w) for words in two free algebras given one moment functional
// per side. Primary route: the moment-cumulant boundary recursion over
// contiguous subwords (mixed cumulants vanish by freeness, so only same-side
// blocks through the first letter contribute). Secondary route: the literal
// sum over tag-monochromatic non-crossing partitions, kept for cross-checks
// on short words.
//
// An engine instance owns moment/cumulant caches, so share one engine per
// thread; the measures and oracles behind it are immutable.
template <class S>
class FreePairEngine {
  public:
    using MomentFn = std::function<S(const ElementFn&)>;

    FreePairEngine(MomentFn phi_u, MomentFn phi_v,
                   int recursion_ceiling = kWordRecursionCeiling,
                   int nc_ceiling = kWordNcCeiling)
        : phi_u_(std::move(phi_u)), phi_v_(std::move(phi_v)),
          recursion_ceiling_(recursion_ceiling), nc_ceiling_(nc_ceiling) {}

    S word_moment(const Word& w) {
        const auto& f = w.f;
        int L = static_cast<int>(f.size());
        if (L == 0) return S(1);
        if (L > recursion_ceiling_)
            throw SizeLimitExceeded("word length " + std::to_string(L));
        auto key = word_key(w);
        auto hit = word_memo_.find(key);
        if (hit != word_memo_.end()) return hit->second;
        interval_memo_.assign(static_cast<size_t>(L) * static_cast<size_t>(L + 1), {false, S(0)});
        factors_ = &f;
        S val = interval(0, L);
        word_memo_.emplace(std::move(key), val);
        return val;
    }

    // Literal monochromatic non-crossing partition sum.
    S word_moment_nc(const Word& w) {
        const auto& f = w.f;
        int L = static_cast<int>(f.size());
        if (L == 0) return S(1);
        if (L > nc_ceiling_) throw SizeLimitExceeded("word length " + std::to_string(L) + " for NC route");
        S acc(0);
        for_each_nc(L, [&](const NonCrossingPartition& p) {
            S prod(1);
            for (const auto& b : p.blocks) {
                Side side = f[static_cast<size_t>(b[0] - 1)].side;
                std::vector<ElementFn> fns;
                fns.reserve(b.size());
                for (int e : b) {
                    const auto& el = f[static_cast<size_t>(e - 1)];
                    if (el.side != side) { prod = S(0); break; }
                    fns.push_back(el.fn);
                }
                if (prod == S(0)) break;
                prod *= tag_cumulant(side, std::move(fns));
            }
            acc += prod;
        });
        return acc;
    }

    S phi(Side side, const ElementFn& fn) {
        auto key = std::make_tuple(side == Side::U ? 0 : 1, fn.x_half, fn.res);
        auto it = phi_memo_.find(key);
        if (it != phi_memo_.end()) return it->second;
        S v = side == Side::U ? phi_u_(fn) : phi_v_(fn);
        phi_memo_.emplace(key, v);
        return v;
    }

    // Joint cumulant of elements of one algebra, in word order. Although the
    // elements commute, free cumulants are only invariant under cyclic
    // rotation of the tuple (the non-crossing lattice breaks full
    // permutation symmetry from order 4 on), so the order is preserved and
    // memoized as given.
    S tag_cumulant(Side side, std::vector<ElementFn> fns) {
        std::vector<int> key;
        key.reserve(fns.size() * 2 + 1);
        key.push_back(side == Side::U ? 0 : 1);
        for (const auto& fn : fns) { key.push_back(fn.x_half); key.push_back(fn.res); }
        auto it = cum_memo_.find(key);
        if (it != cum_memo_.end()) return it->second;

        int k = static_cast<int>(fns.size());
        S val;
        if (k == 1) {
            val = phi(side, fns[0]);
        } else {
            // phi(a_1..a_k) = sum over subsets T of {2..k}: kappa({1} u T) *
            // product of gap moments; solve for the full-set cumulant.
            ElementFn all;
            for (const auto& fn : fns) all = all * fn;
            S acc = phi(side, all);
            int rest = k - 1;
            for (int mask = 0; mask < (1 << rest) - 1; ++mask) {
                std::vector<ElementFn> block(1, fns[0]);
                S gaps(1);
                ElementFn gapfn;
                bool gapOpen = false;
                for (int j = 0; j < rest; ++j) {
                    if (mask & (1 << j)) {
                        if (gapOpen) { gaps *= phi(side, gapfn); gapfn = ElementFn{}; gapOpen = false; }
                        block.push_back(fns[static_cast<size_t>(j + 1)]);
                    } else {
                        gapfn = gapfn * fns[static_cast<size_t>(j + 1)];
                        gapOpen = true;
                    }
                }
                if (gapOpen) gaps *= phi(side, gapfn);
                acc -= tag_cumulant(side, std::move(block)) * gaps;
            }
            val = acc;
        }
        cum_memo_.emplace(std::move(key), val);
        return val;
    }

  private:
    S interval(int lo, int hi) {
        if (lo >= hi) return S(1);
        auto& slot = interval_memo_[static_cast<size_t>(lo) * static_cast<size_t>(factors_->size() + 1) +
                                    static_cast<size_t>(hi)];
        if (slot.first) return slot.second;
        const auto& f = *factors_;
        Side side = f[static_cast<size_t>(lo)].side;
        std::vector<int> pos;
        for (int p = lo + 1; p < hi; ++p)
            if (f[static_cast<size_t>(p)].side == side) pos.push_back(p);
        int np = static_cast<int>(pos.size());
        S acc(0);
        for (int mask = 0; mask < (1 << np); ++mask) {
            std::vector<ElementFn> block(1, f[static_cast<size_t>(lo)].fn);
            S prod(1);
            int prev = lo;
            for (int j = 0; j < np; ++j) {
                if (!(mask & (1 << j))) continue;
                int p = pos[static_cast<size_t>(j)];
                block.push_back(f[static_cast<size_t>(p)].fn);
                prod *= interval(prev + 1, p);
                if (prod == S(0)) break;
                prev = p;
            }
            if (prod == S(0)) continue;
            prod *= interval(prev + 1, hi);
            if (prod == S(0)) continue;
            acc += tag_cumulant(side, std::move(block)) * prod;
        }
        slot = {true, acc};
        return acc;
    }

    static std::vector<int> word_key(const Word& w) {
        std::vector<int> key;
        key.reserve(w.f.size() * 3);
        for (const auto& e : w.f) {
            key.push_back(e.side == Side::U ? 0 : 1);
            key.push_back(e.fn.x_half);
            key.push_back(e.fn.res);
        }
        return key;
    }

    MomentFn phi_u_, phi_v_;
    int recursion_ceiling_;
    int nc_ceiling_;
    const std::vector<AlgebraElement>* factors_ = nullptr;
    std::vector<std::pair<bool, S>> interval_memo_;
    std::map<std::vector<int>, S> word_memo_;
    std::map<std::vector<int>, S> cum_memo_;
    std::map<std::tuple<int, int, int>, S> phi_memo_;
};

template <class S>
typename FreePairEngine<S>::MomentFn measure_oracle(SpectralMeasure<S> mu) {
    return [mu = std::move(mu)](const ElementFn& fn) { return measure_moment(mu, fn); };
}

template <class S>
S free_word_moment(const Word& w, const SpectralMeasure<S>& mu_u, const SpectralMeasure<S>& mu_v) {
    FreePairEngine<S> eng(measure_oracle(mu_u), measure_oracle(mu_v));
    return eng.word_moment(w);
}

// ---------------------------------------------------------------------------
// Inverse-element mixed cumulants C_n = kappa(V^{-1}, V, ..., V)
// ---------------------------------------------------------------------------

template <class S>
struct InverseMixedCumulants {
    std::vector<S> values;           // C_1..C_N from the recursion
    TruncatedSeries<S> series;       // (z + C_1) / (1 + z r(z)), order N-1
};

// C_2 = 1 - C_1 R_1, C_n = -sum_{i<n} C_i R_{n-i} for n >= 3; the same
// sequence is the expansion of (z + C_1)/(1 + z r(z)).
template <class S>
InverseMixedCumulants<S> inverse_mixed_cumulants(const TruncatedSeries<S>& r_v, const S& c1, int N) {
    if (r_v.order() < N - 1) throw OrderTooLow("r-transform order " + std::to_string(r_v.order()) +
                                               " < " + std::to_string(N - 1));
    auto R = [&](int k) { return r_v[k - 1]; };  // R_k = coefficient k-1
    InverseMixedCumulants<S> out;
    out.values.assign(static_cast<size_t>(N), S(0));
    out.values[0] = c1;
    if (N >= 2) out.values[1] = S(1) - c1 * R(1);
    for (int n = 3; n <= N; ++n) {
        S acc(0);
        for (int i = 1; i <= n - 1; ++i) acc += out.values[static_cast<size_t>(i - 1)] * R(n - i);
        out.values[static_cast<size_t>(n - 1)] = -acc;
    }
    TruncatedSeries<S> num(N - 1);
    num[0] = c1;
    if (N - 1 >= 1) num[1] = S(1);
    TruncatedSeries<S> den = TruncatedSeries<S>::constant(S(1), N - 1) + shifted_up(truncated(r_v, N - 2));
    out.series = num / truncated(den, N - 1);
    // the recursion and the series expansion are the same relation written
    // two ways; disagreement beyond roundoff would be an internal fault
    for (int n = 1; n <= N - 1; ++n) {
        S diff = out.series[n - 1] - out.values[static_cast<size_t>(n - 1)];
        double scale = std::max(1.0, abs_to_double(out.values[static_cast<size_t>(n - 1)]));
        if (abs_to_double(diff) > (is_exact_scalar_v<S> ? 0.0 : 1e-9) * scale)
            throw Error("inverse-element cumulants: recursion and series disagree");
    }
    return out;
}

} // namespace freeprob

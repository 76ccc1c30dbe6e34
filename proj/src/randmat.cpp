#include "freeprob/randmat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace freeprob {

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

namespace {

Matrix transpose(const Matrix& A) {
    Matrix T(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) T.at(j, i) = A.at(i, j);
    return T;
}

} // namespace

// i-k-j loop order: the inner loop is a contiguous scaled-row accumulation,
// which vectorizes without any floating-point reassociation.
Matrix matmul(const Matrix& A, const Matrix& B) {
    int n = A.n;
    Matrix C(n);
    for (int i = 0; i < n; ++i) {
        const double* ai = &A.a[static_cast<size_t>(i) * n];
        double* ci = &C.a[static_cast<size_t>(i) * n];
        for (int k = 0; k < n; ++k) {
            double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = &B.a[static_cast<size_t>(k) * n];
            for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    return C;
}

Matrix rotate_diag(const Matrix& Q, const std::vector<double>& d) {
    int n = Q.n;
    Matrix S(n);  // Q diag(d)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) S.at(i, j) = Q.at(i, j) * d[static_cast<size_t>(j)];
    return matmul(S, transpose(Q));
}

double trace(const Matrix& A) {
    double t = 0;
    for (int i = 0; i < A.n; ++i) t += A.at(i, i);
    return t;
}

double trace_prod(const Matrix& A, const Matrix& B) {
    double t = 0;
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) t += A.at(i, j) * B.at(j, i);
    return t;
}

Matrix haar_orthogonal(int n, Rng& rng) {
    if (n < 2) throw Error("haar_orthogonal: need n >= 2");
    Matrix A(n);
    for (double& x : A.a) x = rng.normal();

    // Householder QR, reflectors kept for the explicit Q.
    std::vector<std::vector<double>> vs;
    vs.reserve(static_cast<size_t>(n));
    std::vector<double> rdiag(static_cast<size_t>(n), 1.0);
    for (int k = 0; k < n; ++k) {
        double norm = 0;
        for (int i = k; i < n; ++i) norm += A.at(i, k) * A.at(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            vs.emplace_back();
            rdiag[static_cast<size_t>(k)] = 1.0;
            continue;
        }
        double alpha = A.at(k, k) > 0 ? -norm : norm;
        std::vector<double> v(static_cast<size_t>(n - k), 0.0);
        for (int i = k; i < n; ++i) v[static_cast<size_t>(i - k)] = A.at(i, k);
        v[0] -= alpha;
        double vn2 = 0;
        for (double x : v) vn2 += x * x;
        if (vn2 > 0) {
            for (int j = k; j < n; ++j) {
                double dot = 0;
                for (int i = k; i < n; ++i) dot += v[static_cast<size_t>(i - k)] * A.at(i, j);
                double f = 2.0 * dot / vn2;
                for (int i = k; i < n; ++i) A.at(i, j) -= f * v[static_cast<size_t>(i - k)];
            }
        }
        rdiag[static_cast<size_t>(k)] = A.at(k, k);
        vs.push_back(std::move(v));
    }

    Matrix Q = Matrix::identity(n);
    for (int k = n - 1; k >= 0; --k) {
        const auto& v = vs[static_cast<size_t>(k)];
        if (v.empty()) continue;
        double vn2 = 0;
        for (double x : v) vn2 += x * x;
        if (vn2 == 0) continue;
        for (int j = 0; j < n; ++j) {
            double dot = 0;
            for (int i = k; i < n; ++i) dot += v[static_cast<size_t>(i - k)] * Q.at(i, j);
            double f = 2.0 * dot / vn2;
            for (int i = k; i < n; ++i) Q.at(i, j) -= f * v[static_cast<size_t>(i - k)];
        }
    }
    // Haar law needs the R-diagonal sign convention fixed.
    for (int j = 0; j < n; ++j)
        if (rdiag[static_cast<size_t>(j)] < 0)
            for (int i = 0; i < n; ++i) Q.at(i, j) = -Q.at(i, j);
    return Q;
}

namespace {

std::vector<double> draw_spectrum(const Sampler& sampler, int n, Rng& rng) {
    std::vector<double> d(static_cast<size_t>(n));
    for (double& x : d) x = sampler.draw(rng);
    return d;
}

} // namespace

Matrix sample_matrix(const FreePoissonLaw& law, int n, Rng& rng, MatrixModel model) {
    if (n < 16) throw Error("sample_matrix: need n >= 16");
    if (model == MatrixModel::Wishart) {
        int m = static_cast<int>(std::lround(law.lambda * n));
        Matrix A(n);
        std::vector<double> X(static_cast<size_t>(n) * m);
        for (double& x : X) x = rng.normal();
        double scale = law.alpha / n;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double acc = 0;
                const double* xi = &X[static_cast<size_t>(i) * m];
                const double* xj = &X[static_cast<size_t>(j) * m];
                for (int k = 0; k < m; ++k) acc += xi[k] * xj[k];
                A.at(i, j) = A.at(j, i) = scale * acc;
            }
        return A;
    }
    Sampler sampler(law);
    auto d = draw_spectrum(sampler, n, rng);
    Matrix Q = haar_orthogonal(n, rng);
    return rotate_diag(Q, d);
}

Matrix sample_matrix(const FreeBinomialLaw& law, int n, Rng& rng, MatrixModel model) {
    if (n < 16) throw Error("sample_matrix: need n >= 16");
    if (model == MatrixModel::Wishart)
        throw Error("Wishart model is only defined for the free Poisson family");
    Sampler sampler(law);
    auto d = draw_spectrum(sampler, n, rng);
    Matrix Q = haar_orthogonal(n, rng);
    return rotate_diag(Q, d);
}

std::vector<double> sym_eig(Matrix m, int max_sweeps) {
    int n = m.n;
    double fro = 0;
    for (double x : m.a) fro += x * x;
    fro = std::sqrt(fro);
    const double stop = 1e-12 * (fro > 0 ? fro : 1.0);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2.0 * m.at(i, j) * m.at(i, j);
        off = std::sqrt(off);
        if (off <= stop) {
            std::vector<double> ev(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) ev[static_cast<size_t>(i)] = m.at(i, i);
            std::sort(ev.begin(), ev.end());
            return ev;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = m.at(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);
                double app = m.at(p, p), aqq = m.at(q, q);
                m.at(p, p) = app - t * apq;
                m.at(q, q) = aqq + t * apq;
                m.at(p, q) = m.at(q, p) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    double arp = m.at(r, p), arq = m.at(r, q);
                    m.at(r, p) = m.at(p, r) = arp - s * (arq + tau * arp);
                    m.at(r, q) = m.at(q, r) = arq + s * (arp - tau * arq);
                }
            }
        }
    }
    throw NoConvergence("Jacobi sweeps exhausted");
}

double esd_distance(std::vector<double> eigs, const LawCdf& cdf) {
    if (eigs.empty()) throw Error("esd_distance: empty spectrum");
    std::sort(eigs.begin(), eigs.end());
    double n = static_cast<double>(eigs.size());
    double dist = 0;
    for (size_t i = 0; i < eigs.size(); ++i) {
        double F = cdf(eigs[i]);
        dist = std::max(dist, std::abs(F - static_cast<double>(i) / n));
        dist = std::max(dist, std::abs(F - static_cast<double>(i + 1) / n));
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Monte Carlo regression residuals
// ---------------------------------------------------------------------------

namespace {

struct Accum {
    std::string name;
    double sum = 0, sumsq = 0, scale_sum = 0;

    void add(double residual, double scale) {
        sum += residual;
        sumsq += residual * residual;
        scale_sum += scale;
    }
};

} // namespace

McReport mc_regression_check(double sigma, double theta, double alpha, int dim, int trials,
                             McTarget target, int n_max_moment, std::uint64_t seed, double c_abs,
                             double c_shift) {
    if (!(theta > 1.0)) throw ThetaNotGreaterThanOne();
    if (n_max_moment > 6) throw SizeLimitExceeded("n_max_moment > 6");
    const double lambda = sigma + theta;
    const bool do_t1 = target != McTarget::T2;
    const bool do_t2 = target != McTarget::T1;
    auto [c1, d1] = regression_constants(sigma, theta, alpha, Theorem::T1);
    auto [c2, d2] = regression_constants(sigma, theta, alpha, Theorem::T2);
    c1 += c_shift;
    c2 += c_shift;

    FreePoissonLaw lawV(lambda, alpha);
    FreeBinomialLaw lawU(sigma, theta);
    Sampler sampV(lawV), sampU(lawU);

    std::vector<Accum> acc;
    auto slot = [&](const std::string& name) -> Accum& {
        for (auto& a : acc)
            if (a.name == name) return a;
        acc.push_back(Accum{name, 0, 0, 0});
        return acc.back();
    };

    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
        std::vector<double> dV = draw_spectrum(sampV, dim, rng);
        std::vector<double> dU = draw_spectrum(sampU, dim, rng);
        for (double x : dV)
            if (x < 1e-8) throw IllConditioned("V spectrum touches zero");
        for (double x : dU)
            if (1.0 - x < 1e-8) throw IllConditioned("I-U spectrum touches zero");
        Matrix QV = haar_orthogonal(dim, rng);
        Matrix QU = haar_orthogonal(dim, rng);

        Matrix V = rotate_diag(QV, dV);
        Matrix U = rotate_diag(QU, dU);
        std::vector<double> inv1mU(static_cast<size_t>(dim)), ratio(static_cast<size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            inv1mU[static_cast<size_t>(i)] = 1.0 / (1.0 - dU[static_cast<size_t>(i)]);
            ratio[static_cast<size_t>(i)] = dU[static_cast<size_t>(i)] / (1.0 - dU[static_cast<size_t>(i)]);
        }
        Matrix ResU = rotate_diag(QU, inv1mU);   // (I-U)^{-1}
        Matrix UResU = rotate_diag(QU, ratio);   // U(I-U)^{-1}

        // powers of W = VU
        std::vector<Matrix> W;
        W.push_back(Matrix::identity(dim));
        W.push_back(matmul(V, U));
        for (int k = 2; k <= n_max_moment + 1; ++k) W.push_back(matmul(W.back(), W[1]));

        auto tr = [&](const Matrix& M) { return trace(M) / dim; };
        auto trp = [&](const Matrix& A, const Matrix& B) { return trace_prod(A, B) / dim; };

        std::vector<double> alph(static_cast<size_t>(n_max_moment) + 2);
        for (int k = 0; k <= n_max_moment + 1; ++k) alph[static_cast<size_t>(k)] = tr(W[static_cast<size_t>(k)]);

        if (do_t1) {
            for (int n = 0; n <= n_max_moment; ++n) {
                double t1 = trp(V, W[static_cast<size_t>(n)]);
                double t2 = alph[static_cast<size_t>(n + 1)];
                double t3 = c1 * alph[static_cast<size_t>(n)];
                slot("var1_n" + std::to_string(n)).add(t1 - t2 - t3,
                                                       std::abs(t1) + std::abs(t2) + std::abs(t3));
            }
            for (int n = 1; n <= n_max_moment; ++n) {
                double t1 = trp(UResU, W[static_cast<size_t>(n - 1)]);
                double t2 = d1 * alph[static_cast<size_t>(n)];
                slot("var2_n" + std::to_string(n)).add(t1 - t2, std::abs(t1) + std::abs(t2));
            }
        }
        if (do_t2) {
            std::vector<double> invV(static_cast<size_t>(dim));
            for (int i = 0; i < dim; ++i) invV[static_cast<size_t>(i)] = 1.0 / dV[static_cast<size_t>(i)];
            Matrix Vinv = rotate_diag(QV, invV);
            Matrix RV = matmul(ResU, Vinv);     // (I-U)^{-1} V^{-1}
            Matrix RVRU = matmul(RV, UResU);    // (I-U)^{-1} V^{-1} U (I-U)^{-1} (commuting diag forms)

            double y1 = tr(RV);  // phi(Y^{-1})
            slot("reg21_n0").add(y1 - c2, std::abs(y1) + std::abs(c2));
            for (int n = 1; n <= n_max_moment; ++n) {
                double t1 = trp(UResU, W[static_cast<size_t>(n - 1)]);
                double t2 = c2 * alph[static_cast<size_t>(n)];
                slot("var2c_n" + std::to_string(n)).add(t1 - t2, std::abs(t1) + std::abs(t2));
            }
            for (int n = 1; n <= n_max_moment; ++n) {
                double t1 = trp(RVRU, W[static_cast<size_t>(n - 1)]);
                double t2 = d2 * alph[static_cast<size_t>(n)];
                slot("var21_n" + std::to_string(n)).add(t1 - t2, std::abs(t1) + std::abs(t2));
            }
        }
    }

    McReport rep;
    rep.seed = seed;
    rep.dim = dim;
    rep.trials = trials;
    rep.target = target == McTarget::T1 ? "t1" : (target == McTarget::T2 ? "t2" : "both");
    rep.c_abs = c_abs;
    for (const auto& a : acc) {
        McEntry e;
        e.name = a.name;
        e.estimate = a.sum / trials;
        double var = trials > 1 ? (a.sumsq - a.sum * a.sum / trials) / (trials - 1.0) : 0.0;
        e.stderr_ = trials > 1 ? std::sqrt(std::max(var, 0.0) / trials) : 0.0;
        e.scale = a.scale_sum / trials;
        e.allowance = std::max(3.0 * e.stderr_, c_abs * e.scale / dim);
        e.pass = std::abs(e.estimate) <= e.allowance;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

std::string mc_report_digest(const McReport& rep) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "seed=%llu dim=%d trials=%d target=%s c_abs=%.17g\n",
                  static_cast<unsigned long long>(rep.seed), rep.dim, rep.trials,
                  rep.target.c_str(), rep.c_abs);
    out += buf;
    for (const auto& e : rep.entries) {
        std::snprintf(buf, sizeof(buf), "%s estimate=%.17g stderr=%.17g scale=%.17g allowance=%.17g pass=%d\n",
                      e.name.c_str(), e.estimate, e.stderr_, e.scale, e.allowance, e.pass ? 1 : 0);
        out += buf;
    }
    return out;
}

} // namespace freeprob

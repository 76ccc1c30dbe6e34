#pragma once

#include "freeprob/characterize.hpp"
#include "freeprob/laws.hpp"
#include "freeprob/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace freeprob {

// Dense square matrix, row-major. Symmetry is a property of how instances
// are built (rotated diagonals, Wishart products), checked where required.
struct Matrix {
    int n = 0;
    std::vector<double> a;

    Matrix() = default;
    explicit Matrix(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, 0.0) {}

    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

    static Matrix identity(int n);
};

Matrix matmul(const Matrix& A, const Matrix& B);
// Q diag(d) Q^T
Matrix rotate_diag(const Matrix& Q, const std::vector<double>& d);
double trace(const Matrix& A);
double trace_prod(const Matrix& A, const Matrix& B);  // tr(AB) without forming AB

// Haar-distributed orthogonal matrix: Gaussian matrix, Householder QR, R-sign
// correction.
Matrix haar_orthogonal(int n, Rng& rng);

enum class MatrixModel { RotatedSpectrum, Wishart };

// Finite-dimensional model with the law's spectral distribution: independent
// Haar conjugation of an iid spectrum, or (free Poisson only) a Wishart-type
// product (alpha/n) X X^T with X of shape n x round(lambda n).
Matrix sample_matrix(const FreePoissonLaw& law, int n, Rng& rng,
                     MatrixModel model = MatrixModel::RotatedSpectrum);
Matrix sample_matrix(const FreeBinomialLaw& law, int n, Rng& rng,
                     MatrixModel model = MatrixModel::RotatedSpectrum);

// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
// Sweeps stop once the off-diagonal Frobenius norm falls below 1e-12 times
// the matrix norm; more than `max_sweeps` sweeps raises NoConvergence.
std::vector<double> sym_eig(Matrix m, int max_sweeps = 50);

// Kolmogorov distance between the empirical distribution of `eigs` and a law
// CDF (atoms included).
double esd_distance(std::vector<double> eigs, const LawCdf& cdf);

// ---------------------------------------------------------------------------
// Monte Carlo regression checks
// ---------------------------------------------------------------------------

struct McEntry {
    std::string name;
    double estimate = 0;   // mean residual across trials
    double stderr_ = 0;    // standard error of the mean
    double scale = 0;      // mean magnitude of the identity's terms
    double allowance = 0;  // max(3 stderr, c_abs scale / dim)
    bool pass = false;
};

struct McReport {
    std::uint64_t seed = 0;
    int dim = 0;
    int trials = 0;
    std::string target;  // "t1", "t2" or "both"
    double c_abs = 0;
    std::vector<McEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
};

enum class McTarget { T1, T2, Both };

// Empirical trace residuals of the regression identities on independently
// rotated matrix models. `c_shift` perturbs the constant c (negative
// control); theta > 1 keeps V and I-U invertible with margin.
McReport mc_regression_check(double sigma, double theta, double alpha, int dim, int trials,
                             McTarget target, int n_max_moment, std::uint64_t seed,
                             double c_abs = 8.0, double c_shift = 0.0);

// Deterministic text form used for bitwise reproducibility checks.
std::string mc_report_digest(const McReport& rep);

} // namespace freeprob

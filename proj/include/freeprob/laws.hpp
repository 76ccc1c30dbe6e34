#pragma once

#include "freeprob/errors.hpp"
#include "freeprob/freemoments.hpp"
#include "freeprob/quadrature.hpp"
#include "freeprob/rng.hpp"
#include "freeprob/series.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <vector>

namespace freeprob {

// Marchenko-Pastur (free Poisson) law nu(lambda, alpha): cumulants
// R_n = alpha^n lambda, continuous support (alpha(1-sqrt(lambda))^2,
// alpha(1+sqrt(lambda))^2), atom of mass max(0, 1-lambda) at 0.
struct FreePoissonLaw {
    double lambda;
    double alpha;

    FreePoissonLaw(double lambda_, double alpha_);

    double support_lo() const;
    double support_hi() const;
    double atom_mass() const { return lambda < 1.0 ? 1.0 - lambda : 0.0; }
};

// Free binomial law beta(sigma, theta) on [0, 1]: continuous part on
// (x_-, x_+), atom (1-sigma) at 0 iff 0<sigma<1, atom (1-theta) at 1 iff
// 0<theta<1.
struct FreeBinomialLaw {
    double sigma;
    double theta;

    FreeBinomialLaw(double sigma_, double theta_);

    double x_minus() const;
    double x_plus() const;
    double atom0_mass() const { return (sigma > 0.0 && sigma < 1.0) ? 1.0 - sigma : 0.0; }
    double atom1_mass() const { return (theta > 0.0 && theta < 1.0) ? 1.0 - theta : 0.0; }
};

double density_eval(const FreePoissonLaw& law, double x);
double density_eval(const FreeBinomialLaw& law, double x);

enum class MomentMethod { Series, Quadrature };

std::vector<double> law_moments(const FreePoissonLaw& law, int n_max,
                                MomentMethod method = MomentMethod::Series, int nodes = 2048);
std::vector<double> law_moments(const FreeBinomialLaw& law, int n_max,
                                MomentMethod method = MomentMethod::Series, int nodes = 2048);

struct NegativeMoments {
    double phi_inv;   // phi(Y^{-1}) = 1/(alpha (lambda-1))
    double phi_inv2;  // phi(Y^{-2}) = lambda/(alpha^2 (lambda-1)^3)
};

// Requires lambda > 1 (support separated from 0); the closed forms are
// cross-checked internally against quadrature.
NegativeMoments negative_moments(const FreePoissonLaw& law, int nodes = 2048);

// Cauchy transform of beta(sigma, theta); branch chosen so G(z) ~ 1/z at
// infinity and Im G(z) Im z < 0 off the real axis. Real z must lie outside
// [0, 1].
std::complex<double> binomial_cauchy(double sigma, double theta, std::complex<double> z);

struct ResolventFunctionals {
    double F;  // phi((I-U)^{-1})
    double H;  // phi((I-U)^{-2})
};

ResolventFunctionals resolvent_functionals(const FreeBinomialLaw& law, double delta_guard = 1e-6,
                                           int nodes = 2048);

// Quadrature discretization: atoms carried exactly, continuous part by
// Gauss-Legendre after x = center + radius sin(t), which absorbs the
// square-root edges of both densities.
SpectralMeasure<double> discretize(const FreePoissonLaw& law, int node_count);
SpectralMeasure<double> discretize(const FreeBinomialLaw& law, int node_count);
SpectralMeasure<long double> discretize_ld(const FreePoissonLaw& law, int node_count);
SpectralMeasure<long double> discretize_ld(const FreeBinomialLaw& law, int node_count);

// Atoms + tabulated continuous CDF; shared by sampling, ESD distances and
// the CLI.
class LawCdf {
  public:
    LawCdf(std::vector<std::pair<double, double>> atoms, std::vector<double> xs,
           std::vector<double> cum, double cont_mass);

    double operator()(double x) const;
    double continuous_quantile(double v) const;  // v in [0,1)
    const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }
    double continuous_mass() const { return cont_mass_; }

  private:
    std::vector<std::pair<double, double>> atoms_;  // (location, mass), sorted
    std::vector<double> xs_;                        // increasing grid
    std::vector<double> cum_;                       // cumulative, cum_.back() == 1
    double cont_mass_;
};

LawCdf make_cdf(const FreePoissonLaw& law, int table_size = 4096);
LawCdf make_cdf(const FreeBinomialLaw& law, int table_size = 4096);

// Inverse-CDF sampler: atoms with their probabilities, continuous part by
// monotone interpolation of the tabulated CDF.
class Sampler {
  public:
    explicit Sampler(const FreePoissonLaw& law, int table_size = 4096);
    explicit Sampler(const FreeBinomialLaw& law, int table_size = 4096);

    double draw(Rng& rng) const;

  private:
    LawCdf cdf_;
};

double sample(const FreePoissonLaw& law, Rng& rng);
double sample(const FreeBinomialLaw& law, Rng& rng);

// Total mass of the continuous density by quadrature (min(1, lambda) for the
// free Poisson family; used when reporting the normalization convention).
double poisson_continuous_mass(const FreePoissonLaw& law, int nodes = 2048);

void write_density_csv(std::ostream& os, const FreePoissonLaw& law, int points);
void write_density_csv(std::ostream& os, const FreeBinomialLaw& law, int points);

// ---------------------------------------------------------------------------
// Closed-form series data (exact in rational scalars)
// ---------------------------------------------------------------------------

template <class S>
std::vector<S> free_poisson_cumulants(const S& lambda, const S& alpha, int N) {
    std::vector<S> kappa;
    kappa.reserve(static_cast<size_t>(N));
    S p(1);
    for (int n = 1; n <= N; ++n) {
        p = p * alpha;
        kappa.push_back(lambda * p);
    }
    return kappa;
}

template <class S>
std::vector<S> free_poisson_moments(const S& lambda, const S& alpha, int N) {
    return moments_from_cumulants(free_poisson_cumulants(lambda, alpha, N));
}

// Moments of beta(sigma, theta) from the large-z expansion of its Cauchy
// transform: with s = sigma+theta and B = (s-2)(1-sigma) + 2(1-s),
//   M(w) = [(s-2) + (1-sigma) w - sqrt(s^2 + 2 B w + (1-sigma)^2 w^2)] / (2(w-1)),
// whose coefficient of w^n is phi(U^n). Exact in rational arithmetic.
template <class S>
std::vector<S> free_binomial_moments(const S& sigma, const S& theta, int N) {
    if (N < 1) return {};
    const S s = sigma + theta;
    if (s == S(1)) throw Error("free binomial moments: sigma + theta = 1 is outside the family");
    const S oneMinusSigma = S(1) - sigma;
    const S B = (s - S(2)) * oneMinusSigma + S(2) * (S(1) - s);
    TruncatedSeries<S> under(N);
    under[0] = s * s;
    if (N >= 1) under[1] = S(2) * B;
    if (N >= 2) under[2] = oneMinusSigma * oneMinusSigma;
    TruncatedSeries<S> root = series_sqrt(under, s);
    TruncatedSeries<S> num(N);
    num[0] = s - S(2);
    if (N >= 1) num[1] = oneMinusSigma;
    num = num - root;
    TruncatedSeries<S> den(N);
    den[0] = S(-2);
    den[1] = S(2);
    TruncatedSeries<S> M = num / den;
    std::vector<S> m;
    m.reserve(static_cast<size_t>(N));
    for (int n = 1; n <= N; ++n) m.push_back(M[n]);
    return m;
}

} // namespace freeprob

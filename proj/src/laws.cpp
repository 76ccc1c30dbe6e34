#include "freeprob/laws.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>

namespace freeprob {

namespace {

constexpr double kPi = 3.141592653589793238462643;

// Common shape of both families: atoms plus one continuous density on
// (lo, hi) with square-root edge behaviour.
struct LawView {
    std::vector<std::pair<double, double>> atoms;  // (location, mass)
    double lo, hi;
    std::function<double(double)> density;
};

LawView view_of(const FreePoissonLaw& law) {
    LawView v;
    if (law.atom_mass() > 0.0) v.atoms.push_back({0.0, law.atom_mass()});
    v.lo = law.support_lo();
    v.hi = law.support_hi();
    v.density = [law](double x) { return density_eval(law, x); };
    return v;
}

LawView view_of(const FreeBinomialLaw& law) {
    LawView v;
    if (law.atom0_mass() > 0.0) v.atoms.push_back({0.0, law.atom0_mass()});
    if (law.atom1_mass() > 0.0) v.atoms.push_back({1.0, law.atom1_mass()});
    v.lo = law.x_minus();
    v.hi = law.x_plus();
    v.density = [law](double x) { return density_eval(law, x); };
    return v;
}

// Quadrature nodes of the continuous part under x = c + r sin(t); the factor
// r cos(t) cancels the edge square roots, so Gauss-Legendre in t converges
// spectrally.
template <class S>
void fill_nodes(SpectralMeasure<S>& mu, const LawView& v, int node_count) {
    const long double c = 0.5L * (static_cast<long double>(v.lo) + v.hi);
    const long double r = 0.5L * (static_cast<long double>(v.hi) - v.lo);
    const long double halfpi = 1.57079632679489661923132169163975144L;
    for (const QuadNode& q : gauss_legendre(node_count)) {
        long double t = halfpi * q.x;
        long double x = c + r * std::sin(t);
        x = std::min(std::max(x, static_cast<long double>(v.lo) + 1e-300L),
                     static_cast<long double>(v.hi) - 1e-300L);
        long double w = static_cast<long double>(v.density(static_cast<double>(x))) * r *
                        std::cos(t) * halfpi * q.w;
        mu.nodes.push_back({static_cast<S>(x), static_cast<S>(w)});
    }
}

template <class S>
SpectralMeasure<S> discretize_view(const LawView& v, int node_count) {
    if (node_count < 16) throw Error("discretize: need at least 16 nodes");
    SpectralMeasure<S> mu;
    for (auto [x, m] : v.atoms) mu.atoms.push_back({static_cast<S>(x), static_cast<S>(m)});
    mu.lo = static_cast<S>(std::min(v.lo, v.atoms.empty() ? v.lo : std::min_element(
                v.atoms.begin(), v.atoms.end())->first));
    mu.hi = static_cast<S>(std::max(v.hi, v.atoms.empty() ? v.hi : std::max_element(
                v.atoms.begin(), v.atoms.end())->first));
    fill_nodes(mu, v, node_count);
    return mu;
}

double quad_integral(const LawView& v, const std::function<double(double)>& f, int nodes) {
    SpectralMeasure<double> mu;
    fill_nodes(mu, v, nodes);
    double acc = 0;
    for (const auto& n : mu.nodes) acc += n.w * f(n.x);
    return acc;
}

LawCdf make_cdf_view(const LawView& v, int table_size) {
    // Cumulative trapezoid in t-space; the transformed integrand is smooth.
    const double c = 0.5 * (v.lo + v.hi);
    const double r = 0.5 * (v.hi - v.lo);
    std::vector<double> xs, cum;
    xs.reserve(static_cast<size_t>(table_size) + 1);
    cum.reserve(static_cast<size_t>(table_size) + 1);
    double acc = 0;
    double prev_g = 0;  // integrand vanishes at the edges (cos factor)
    double prev_t = -kPi / 2;
    xs.push_back(v.lo);
    cum.push_back(0.0);
    for (int i = 1; i <= table_size; ++i) {
        double t = -kPi / 2 + kPi * static_cast<double>(i) / table_size;
        double x = c + r * std::sin(t);
        double g = 0;
        if (i < table_size) g = v.density(std::min(std::max(x, v.lo + 1e-300), v.hi - 1e-300)) * r * std::cos(t);
        acc += 0.5 * (g + prev_g) * (t - prev_t);
        xs.push_back(i == table_size ? v.hi : x);
        cum.push_back(acc);
        prev_g = g;
        prev_t = t;
    }
    double cont = acc;
    for (double& u : cum) u /= cont > 0 ? cont : 1.0;
    auto atoms = v.atoms;
    std::sort(atoms.begin(), atoms.end());
    return LawCdf(std::move(atoms), std::move(xs), std::move(cum), cont);
}

} // namespace

// ---------------------------------------------------------------------------
// FreePoissonLaw
// ---------------------------------------------------------------------------

FreePoissonLaw::FreePoissonLaw(double lambda_, double alpha_) : lambda(lambda_), alpha(alpha_) {
    if (!(lambda > 0.0) || !(alpha > 0.0))
        throw std::invalid_argument("free Poisson law requires lambda > 0 and alpha > 0");
}

double FreePoissonLaw::support_lo() const {
    double d = 1.0 - std::sqrt(lambda);
    return alpha * d * d;
}

double FreePoissonLaw::support_hi() const {
    double d = 1.0 + std::sqrt(lambda);
    return alpha * d * d;
}

double density_eval(const FreePoissonLaw& law, double x) {
    if (!(x > law.support_lo() && x < law.support_hi()))
        throw OutsideSupport("x=" + std::to_string(x));
    double dev = x - law.alpha * (1.0 + law.lambda);
    double rad = 4.0 * law.lambda * law.alpha * law.alpha - dev * dev;
    if (rad <= 0.0) return 0.0;
    return std::sqrt(rad) / (2.0 * kPi * law.alpha * x);
}

std::vector<double> law_moments(const FreePoissonLaw& law, int n_max, MomentMethod method, int nodes) {
    if (method == MomentMethod::Series)
        return free_poisson_moments(law.lambda, law.alpha, n_max);
    auto mu = discretize(law, nodes);
    std::vector<double> m;
    m.reserve(static_cast<size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) m.push_back(measure_moment(mu, ElementFn::power(n)));
    return m;
}

NegativeMoments negative_moments(const FreePoissonLaw& law, int nodes) {
    if (law.lambda <= 1.0)
        throw AtomAtZero("negative moments require rate > 1, got " + std::to_string(law.lambda));
    double d = law.lambda - 1.0;
    NegativeMoments nm{1.0 / (law.alpha * d), law.lambda / (law.alpha * law.alpha * d * d * d)};
    auto mu = discretize(law, nodes);
    double q1 = measure_moment(mu, ElementFn::power(-1));
    double q2 = measure_moment(mu, ElementFn::power(-2));
    double scale1 = std::max(1.0, std::abs(nm.phi_inv));
    double scale2 = std::max(1.0, std::abs(nm.phi_inv2));
    if (std::abs(q1 - nm.phi_inv) > 1e-8 * scale1 || std::abs(q2 - nm.phi_inv2) > 1e-8 * scale2)
        throw Error("negative moments: closed form and quadrature disagree");
    return nm;
}

double poisson_continuous_mass(const FreePoissonLaw& law, int nodes) {
    return quad_integral(view_of(law), [](double) { return 1.0; }, nodes);
}

// ---------------------------------------------------------------------------
// FreeBinomialLaw
// ---------------------------------------------------------------------------

FreeBinomialLaw::FreeBinomialLaw(double sigma_, double theta_) : sigma(sigma_), theta(theta_) {
    double s = sigma + theta;
    if (!(s / (s - 1.0) > 0.0) || !(sigma * theta / (s - 1.0) > 0.0))
        throw std::invalid_argument("free binomial law requires (s)/(s-1) > 0 and sigma theta/(s-1) > 0");
    if (!(sigma > 0.0) || !(theta > 0.0))
        throw std::invalid_argument("free binomial law: this artifact covers sigma, theta > 0");
}

double FreeBinomialLaw::x_minus() const {
    double s = sigma + theta;
    double a = std::sqrt(sigma / s * (1.0 - 1.0 / s));
    double b = std::sqrt(1.0 / s * (1.0 - sigma / s));
    double d = a - b;
    return d * d;
}

double FreeBinomialLaw::x_plus() const {
    double s = sigma + theta;
    double a = std::sqrt(sigma / s * (1.0 - 1.0 / s));
    double b = std::sqrt(1.0 / s * (1.0 - sigma / s));
    double d = a + b;
    return d * d;
}

double density_eval(const FreeBinomialLaw& law, double x) {
    if (!(x > law.x_minus() && x < law.x_plus()))
        throw OutsideSupport("x=" + std::to_string(x));
    double rad = (x - law.x_minus()) * (law.x_plus() - x);
    if (rad <= 0.0) return 0.0;
    return (law.sigma + law.theta) * std::sqrt(rad) / (2.0 * kPi * x * (1.0 - x));
}

std::vector<double> law_moments(const FreeBinomialLaw& law, int n_max, MomentMethod method, int nodes) {
    if (method == MomentMethod::Series)
        return free_binomial_moments(law.sigma, law.theta, n_max);
    auto mu = discretize(law, nodes);
    std::vector<double> m;
    m.reserve(static_cast<size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) m.push_back(measure_moment(mu, ElementFn::power(n)));
    return m;
}

std::complex<double> binomial_cauchy(double sigma, double theta, std::complex<double> z) {
    using C = std::complex<double>;
    double s = sigma + theta;
    C b = (s - 2.0) * z + (1.0 - sigma);
    C disc = b * b - 4.0 * (1.0 - s) * z * (z - 1.0);
    C w = std::sqrt(disc);
    C denom = 2.0 * z * (1.0 - z);
    if (std::abs(z.imag()) > 0.0) {
        C g1 = (b - w) / denom;
        C g2 = (b + w) / denom;
        // Herglotz: the transform maps each half-plane to the opposite one.
        bool ok1 = g1.imag() * z.imag() < 0.0;
        bool ok2 = g2.imag() * z.imag() < 0.0;
        if (ok1 == ok2) {
            // Degenerate imaginary parts: fall back to the candidate closer
            // to the 1/z tail.
            return std::abs(g1 * z - 1.0) <= std::abs(g2 * z - 1.0) ? g1 : g2;
        }
        return ok1 ? g1 : g2;
    }
    double x = z.real();
    if (x >= 0.0 && x <= 1.0)
        throw BranchAmbiguity("real argument inside [0,1] at x=" + std::to_string(x));
    FreeBinomialLaw law(sigma, theta);
    double xmin = std::min(law.x_minus(), law.atom0_mass() > 0 ? 0.0 : law.x_minus());
    double xmax = std::max(law.x_plus(), law.atom1_mass() > 0 ? 1.0 : law.x_plus());
    double g1 = ((b - w) / denom).real();
    double g2 = ((b + w) / denom).real();
    // 1/(x-t) is increasing in t on either side of the support, so G lies
    // strictly between 1/(x - xmin) and 1/(x - xmax) for real x off [0,1].
    auto in_bounds = [&](double g) {
        double lo = 1.0 / (x - xmin), hi = 1.0 / (x - xmax);
        if (lo > hi) std::swap(lo, hi);
        return g > lo - 1e-12 && g < hi + 1e-12;
    };
    bool ok1 = in_bounds(g1), ok2 = in_bounds(g2);
    if (ok1 == ok2) throw BranchAmbiguity("cannot separate branches at x=" + std::to_string(x));
    return ok1 ? C(g1, 0.0) : C(g2, 0.0);
}

ResolventFunctionals resolvent_functionals(const FreeBinomialLaw& law, double delta_guard, int nodes) {
    if (law.theta <= 1.0)
        throw SupportTouchesOne("atom at 1 for theta=" + std::to_string(law.theta));
    if (law.x_plus() >= 1.0 - delta_guard)
        throw SupportTouchesOne("x_plus=" + std::to_string(law.x_plus()));
    LawView v = view_of(law);
    double atomF = 0, atomH = 0;
    for (auto [x, m] : v.atoms) {
        atomF += m / (1.0 - x);
        atomH += m / ((1.0 - x) * (1.0 - x));
    }
    double F = atomF + quad_integral(v, [](double x) { return 1.0 / (1.0 - x); }, nodes);
    double H = atomH + quad_integral(v, [](double x) { return 1.0 / ((1.0 - x) * (1.0 - x)); }, nodes);
    return {F, H};
}

// ---------------------------------------------------------------------------
// Discretization, CDF, sampling
// ---------------------------------------------------------------------------

SpectralMeasure<double> discretize(const FreePoissonLaw& law, int node_count) {
    return discretize_view<double>(view_of(law), node_count);
}
SpectralMeasure<double> discretize(const FreeBinomialLaw& law, int node_count) {
    return discretize_view<double>(view_of(law), node_count);
}
SpectralMeasure<long double> discretize_ld(const FreePoissonLaw& law, int node_count) {
    return discretize_view<long double>(view_of(law), node_count);
}
SpectralMeasure<long double> discretize_ld(const FreeBinomialLaw& law, int node_count) {
    return discretize_view<long double>(view_of(law), node_count);
}

LawCdf::LawCdf(std::vector<std::pair<double, double>> atoms, std::vector<double> xs,
               std::vector<double> cum, double cont_mass)
    : atoms_(std::move(atoms)), xs_(std::move(xs)), cum_(std::move(cum)), cont_mass_(cont_mass) {}

double LawCdf::operator()(double x) const {
    double acc = 0;
    for (auto [a, m] : atoms_)
        if (a <= x) acc += m;
    if (x <= xs_.front()) return acc;
    if (x >= xs_.back()) return acc + cont_mass_;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    size_t hi = static_cast<size_t>(it - xs_.begin());
    size_t lo = hi - 1;
    double t = xs_[hi] > xs_[lo] ? (x - xs_[lo]) / (xs_[hi] - xs_[lo]) : 0.0;
    return acc + cont_mass_ * (cum_[lo] + t * (cum_[hi] - cum_[lo]));
}

double LawCdf::continuous_quantile(double v) const {
    auto it = std::upper_bound(cum_.begin(), cum_.end(), v);
    size_t hi = std::min(static_cast<size_t>(it - cum_.begin()), cum_.size() - 1);
    if (hi == 0) return xs_.front();
    size_t lo = hi - 1;
    double span = cum_[hi] - cum_[lo];
    double t = span > 0 ? (v - cum_[lo]) / span : 0.0;
    return xs_[lo] + t * (xs_[hi] - xs_[lo]);
}

LawCdf make_cdf(const FreePoissonLaw& law, int table_size) {
    return make_cdf_view(view_of(law), table_size);
}
LawCdf make_cdf(const FreeBinomialLaw& law, int table_size) {
    return make_cdf_view(view_of(law), table_size);
}

Sampler::Sampler(const FreePoissonLaw& law, int table_size) : cdf_(make_cdf(law, table_size)) {}
Sampler::Sampler(const FreeBinomialLaw& law, int table_size) : cdf_(make_cdf(law, table_size)) {}

double Sampler::draw(Rng& rng) const {
    double u = rng.uniform01();
    double acc = 0;
    for (auto [x, m] : cdf_.atoms()) {
        acc += m;
        if (u < acc) return x;
    }
    double denom = cdf_.continuous_mass();
    double v = denom > 0 ? (u - acc) / denom : 0.0;
    v = std::min(std::max(v, 0.0), 1.0 - 1e-16);
    return cdf_.continuous_quantile(v);
}

double sample(const FreePoissonLaw& law, Rng& rng) { return Sampler(law).draw(rng); }
double sample(const FreeBinomialLaw& law, Rng& rng) { return Sampler(law).draw(rng); }

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

namespace {

void write_density_csv_view(std::ostream& os, const LawView& v, int points) {
    os << "x,density\n";
    char buf[80];
    for (int i = 1; i < points; ++i) {
        double x = v.lo + (v.hi - v.lo) * static_cast<double>(i) / points;
        std::snprintf(buf, sizeof(buf), "%.12e,%.12e\n", x, v.density(x));
        os << buf;
    }
}

} // namespace

void write_density_csv(std::ostream& os, const FreePoissonLaw& law, int points) {
    write_density_csv_view(os, view_of(law), points);
}
void write_density_csv(std::ostream& os, const FreeBinomialLaw& law, int points) {
    write_density_csv_view(os, view_of(law), points);
}

} // namespace freeprob

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "freeprob/laws.hpp"

#include <cmath>
#include <complex>
#include <sstream>

using namespace freeprob;

namespace {
constexpr double kPi = 3.141592653589793238462643;
}

TEST_CASE("free Poisson density at hand-computed points") {
    FreePoissonLaw nu(1.0, 1.0); // support (0, 4), center 2
    CHECK(density_eval(nu, 2.0) == doctest::Approx(1.0 / (2.0 * kPi)));
    CHECK(density_eval(nu, 1.0) == doctest::Approx(std::sqrt(3.0) / (2.0 * kPi)));
    CHECK(density_eval(nu, 3.0) == doctest::Approx(std::sqrt(3.0) / (6.0 * kPi)));
    CHECK_THROWS_AS(density_eval(nu, 5.0), OutsideSupport);
    CHECK_THROWS_AS(density_eval(nu, 0.0), OutsideSupport);
}

TEST_CASE("free binomial density: beta(1,1) is the arcsine law") {
    FreeBinomialLaw b(1.0, 1.0);
    CHECK(b.x_minus() == doctest::Approx(0.0));
    CHECK(b.x_plus() == doctest::Approx(1.0));
    CHECK(density_eval(b, 0.5) == doctest::Approx(2.0 / kPi));
    // arcsine: 1/(pi sqrt(x(1-x)))
    CHECK(density_eval(b, 0.2) == doctest::Approx(1.0 / (kPi * std::sqrt(0.2 * 0.8))));
    CHECK(b.atom0_mass() == 0.0);
    CHECK(b.atom1_mass() == 0.0);
}

TEST_CASE("normalization: atoms plus continuous mass equal 1 on the parameter grid") {
    for (double lam : {0.5, 1.0, 2.0, 4.0}) {
        FreePoissonLaw nu(lam, 1.0);
        double total = nu.atom_mass() + poisson_continuous_mass(nu);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (auto [sg, th] : {std::pair{1.0, 2.0}, {2.0, 3.0}, {0.5, 2.0}}) {
        FreeBinomialLaw b(sg, th);
        auto mu = discretize(b, 2048);
        CHECK(to_double(mu.total_mass()) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("moments: series and quadrature agree on the grid up to n=8") {
    for (double lam : {0.5, 1.0, 2.0, 4.0}) {
        FreePoissonLaw nu(lam, 1.0);
        auto ms = law_moments(nu, 8, MomentMethod::Series);
        auto mq = law_moments(nu, 8, MomentMethod::Quadrature);
        for (int n = 0; n < 8; ++n)
            CHECK(std::abs(ms[n] - mq[n]) <= 1e-7 * std::max(1.0, std::abs(ms[n])));
    }
    for (auto [sg, th] : {std::pair{1.0, 2.0}, {2.0, 3.0}, {0.5, 2.0}}) {
        FreeBinomialLaw b(sg, th);
        auto ms = law_moments(b, 8, MomentMethod::Series);
        auto mq = law_moments(b, 8, MomentMethod::Quadrature);
        for (int n = 0; n < 8; ++n)
            CHECK(std::abs(ms[n] - mq[n]) <= 1e-7 * std::max(1.0, std::abs(ms[n])));
    }
}

TEST_CASE("free Poisson ground truth: nu(2,1) moments are 2, 6, 22, 90") {
    auto m = law_moments(FreePoissonLaw(2.0, 1.0), 4, MomentMethod::Series);
    CHECK(m[0] == doctest::Approx(2.0));
    CHECK(m[1] == doctest::Approx(6.0));
    CHECK(m[2] == doctest::Approx(22.0));
    CHECK(m[3] == doctest::Approx(90.0));
}

TEST_CASE("binomial moments: beta(1,1) has mean 1/2, beta(1,2) mean 1/3") {
    CHECK(law_moments(FreeBinomialLaw(1.0, 1.0), 1)[0] == doctest::Approx(0.5));
    CHECK(law_moments(FreeBinomialLaw(1.0, 2.0), 1)[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("negative moments match Prop-style closed forms") {
    auto n1 = negative_moments(FreePoissonLaw(2.0, 1.0));
    CHECK(n1.phi_inv == doctest::Approx(1.0));
    CHECK(n1.phi_inv2 == doctest::Approx(2.0));
    auto n2 = negative_moments(FreePoissonLaw(3.0, 2.0));
    CHECK(n2.phi_inv == doctest::Approx(0.25));
    CHECK(n2.phi_inv2 == doctest::Approx(3.0 / 32.0));
    CHECK_THROWS_AS(negative_moments(FreePoissonLaw(1.0, 1.0)), AtomAtZero);
    CHECK_THROWS_AS(negative_moments(FreePoissonLaw(0.5, 1.0)), AtomAtZero);
}

TEST_CASE("binomial Cauchy transform: 1/z asymptotics and Stieltjes inversion") {
    double sg = 1.0, th = 2.0;
    std::complex<double> z(1e6, 0.0);
    auto g = binomial_cauchy(sg, th, z);
    CHECK(std::abs(g - 1.0 / z) <= 1e-9);

    FreeBinomialLaw law(sg, th);
    double lo = law.x_minus(), hi = law.x_plus();
    for (int i = 1; i <= 20; ++i) {
        double x = lo + (hi - lo) * i / 21.0;
        auto gz = binomial_cauchy(sg, th, {x, 1e-6});
        double rho = -gz.imag() / kPi;
        CHECK(std::abs(rho - density_eval(law, x)) <= 1e-5 * std::max(1.0, density_eval(law, x)));
    }
}

TEST_CASE("binomial Cauchy transform: residue at 1 recovers the atom for theta < 1") {
    double sg = 1.0, th = 0.5;
    FreeBinomialLaw law(sg, th);
    REQUIRE(law.atom1_mass() == doctest::Approx(0.5));
    double radius = 0.5 * (1.0 - law.x_plus());
    int K = 257;
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < K; ++k) {
        double t = 2.0 * kPi * (k + 0.5) / K;
        std::complex<double> e(std::cos(t), std::sin(t));
        acc += binomial_cauchy(sg, th, 1.0 + radius * e) * e;
    }
    // residue = (1/2 pi i) contour integral = (r/K) sum_k G(1 + r e^{it_k}) e^{it_k}
    double residue = (radius / K) * acc.real();
    CHECK(residue == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("binomial Cauchy transform rejects real arguments on [0,1]") {
    CHECK_THROWS_AS(binomial_cauchy(1.0, 2.0, {0.5, 0.0}), BranchAmbiguity);
}

TEST_CASE("binomial Cauchy transform on both real sides matches quadrature") {
    FreeBinomialLaw law(1.0, 2.0);
    auto mu = discretize(law, 2048);
    for (double x : {-1.0, -0.2, 1.5, 3.0}) {
        double viaQuad = 0;
        for (const auto& nd : mu.nodes) viaQuad += nd.w / (x - nd.x);
        double viaFormula = binomial_cauchy(1.0, 2.0, {x, 0.0}).real();
        CHECK(viaFormula == doctest::Approx(viaQuad).epsilon(1e-9));
    }
}

TEST_CASE("resolvent functionals: F = 1 + sigma/(theta-1), H >= F^2") {
    auto rf = resolvent_functionals(FreeBinomialLaw(1.0, 2.0));
    CHECK(rf.F == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(rf.H >= rf.F * rf.F - 1e-9);

    auto rf2 = resolvent_functionals(FreeBinomialLaw(2.0, 3.0));
    CHECK(rf2.F == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(rf2.H >= rf2.F * rf2.F - 1e-9);

    // closed-form H = (s-1)[(s-2)(theta-1)+(s-1)]/(theta-1)^3
    CHECK(rf.H == doctest::Approx(6.0).epsilon(1e-7));
    CHECK(rf2.H == doctest::Approx(5.0).epsilon(1e-7));

    auto rf3 = resolvent_functionals(FreeBinomialLaw(1e-7, 2.0));
    CHECK(rf3.F == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(resolvent_functionals(FreeBinomialLaw(1.0, 0.5)), SupportTouchesOne);
}

TEST_CASE("F relation holds across the grid") {
    for (auto [sg, th] : {std::pair{1.0, 2.0}, {2.0, 3.0}, {0.5, 2.0}}) {
        auto rf = resolvent_functionals(FreeBinomialLaw(sg, th));
        CHECK(rf.F == doctest::Approx(1.0 + sg / (th - 1.0)).epsilon(1e-7));
    }
}

TEST_CASE("discretize carries atoms exactly and reproduces the first 8 moments") {
    FreePoissonLaw half(0.5, 1.0);
    auto mu = discretize(half, 2048);
    REQUIRE(mu.atoms.size() == 1);
    CHECK(mu.atoms[0].x == 0.0);
    CHECK(mu.atoms[0].mass == doctest::Approx(0.5));

    FreePoissonLaw two(2.0, 1.0);
    auto mu2 = discretize(two, 2048);
    auto series = law_moments(two, 8, MomentMethod::Series);
    for (int n = 1; n <= 8; ++n)
        CHECK(std::abs(measure_moment(mu2, ElementFn::power(n)) - series[n - 1]) <=
              1e-7 * std::max(1.0, std::abs(series[n - 1])));

    FreeBinomialLaw arc(1.0, 1.0);
    CHECK(discretize(arc, 2048).atoms.empty());
    CHECK_THROWS_AS(discretize(two, 8), Error);
}

TEST_CASE("sampling: atom frequency, mean, and range behave statistically") {
    const int N = 100000;
    {
        Sampler s(FreePoissonLaw(0.5, 1.0));
        Rng rng(1234);
        int zeros = 0;
        for (int i = 0; i < N; ++i)
            if (s.draw(rng) == 0.0) ++zeros;
        double p = static_cast<double>(zeros) / N;
        double se = std::sqrt(0.25 / N);
        CHECK(std::abs(p - 0.5) <= 3.0 * se);
    }
    {
        Sampler s(FreePoissonLaw(2.0, 1.0));
        Rng rng(99);
        double acc = 0, acc2 = 0;
        for (int i = 0; i < N; ++i) {
            double x = s.draw(rng);
            acc += x;
            acc2 += x * x;
        }
        double mean = acc / N;
        double var = acc2 / N - mean * mean;
        CHECK(std::abs(mean - 2.0) <= 3.0 * std::sqrt(var / N));
    }
    {
        Sampler s(FreeBinomialLaw(0.5, 2.0));
        Rng rng(7);
        for (int i = 0; i < 2000; ++i) {
            double x = s.draw(rng);
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
    {
        // one-shot convenience entry point
        Rng rng(3);
        double x = sample(FreeBinomialLaw(1.0, 2.0), rng);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("density csv: header and monotone x column") {
    std::ostringstream os;
    write_density_csv(os, FreePoissonLaw(2.0, 1.0), 64);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "x,density");
    double prev = -1;
    int rows = 0;
    while (std::getline(is, line)) {
        double x = std::stod(line.substr(0, line.find(',')));
        CHECK(x > prev);
        prev = x;
        ++rows;
    }
    CHECK(rows == 63);
}

TEST_CASE("law parameter validation") {
    CHECK_THROWS_AS(FreePoissonLaw(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(FreePoissonLaw(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FreeBinomialLaw(0.3, 0.3), std::invalid_argument); // s < 1
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "freeprob/laws.hpp"
#include "freeprob/transforms.hpp"

#include <random>

using namespace freeprob;

namespace {

TruncatedSeries<Rational> geometric(const Rational& a, const Rational& ratio, int order) {
    // a / (1 - ratio z)
    TruncatedSeries<Rational> s(order);
    Rational v = a;
    for (int k = 0; k <= order; ++k) {
        s[k] = v;
        v *= ratio;
    }
    return s;
}

SpectralMeasure<Rational> two_atoms_q(const Rational& a1, const Rational& p, const Rational& a2) {
    SpectralMeasure<Rational> mu;
    mu.atoms.push_back({a1, p});
    mu.atoms.push_back({a2, Rational(1) - p});
    mu.lo = a1 < a2 ? a1 : a2;
    mu.hi = a1 < a2 ? a2 : a1;
    return mu;
}

std::vector<Rational> atom_moments(const SpectralMeasure<Rational>& mu, int N) {
    std::vector<Rational> m;
    for (int n = 1; n <= N; ++n) m.push_back(measure_moment(mu, ElementFn::power(n)));
    return m;
}

} // namespace

TEST_CASE("r_from_cumulants of the free Poisson law is the geometric series") {
    auto r = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(2), Rational(3), 8));
    // lambda alpha / (1 - alpha z) = 6 / (1 - 3z)
    CHECK(r.s == geometric(Rational(6), Rational(3), 7));

    auto point = r_from_cumulants<Rational>({Rational(5), Rational(0), Rational(0)});
    CHECK(point.s[0] == Rational(5));
    CHECK(point.s[1] == Rational(0));

    auto semi = r_from_cumulants<Rational>({Rational(0), Rational(1), Rational(0), Rational(0)});
    CHECK(semi.s == TruncatedSeries<Rational>{Rational(0), Rational(1), Rational(0), Rational(0)});
}

TEST_CASE("free_add adds cumulants; commutative, associative, identity at 0") {
    auto a = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(1), Rational(2), 8));
    auto b = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(3), Rational(2), 8));
    auto c = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(4), Rational(2), 8));
    CHECK(free_add(a, b).s == c.s); // nu(1,2) boxplus nu(3,2) = nu(4,2)
    CHECK(free_add(a, b).s == free_add(b, a).s);
    CHECK(free_add(free_add(a, b), c).s == free_add(a, free_add(b, c)).s);
    RTransform<Rational> zero{TruncatedSeries<Rational>(7)};
    CHECK(free_add(a, zero).s == a.s);
}

TEST_CASE("s_from_r: free Poisson gives 1/(alpha lambda + alpha z)") {
    auto r = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(3), Rational(1), 9));
    auto s = s_from_r(r);
    // 1/(3 + z) = (1/3) / (1 + z/3)
    CHECK(s.s == geometric(Rational(1, 3), Rational(-1, 3), s.s.order()));
}

TEST_CASE("s_from_r: point mass at 1 has S identically 1") {
    auto r = r_from_cumulants<Rational>({Rational(1), Rational(0), Rational(0), Rational(0)});
    auto s = s_from_r(r);
    for (int k = 0; k <= s.s.order(); ++k) CHECK(s.s[k] == (k == 0 ? Rational(1) : Rational(0)));
}

TEST_CASE("s_from_r rejects zero mean") {
    auto r = r_from_cumulants<Rational>({Rational(0), Rational(1), Rational(0)});
    CHECK_THROWS_AS(s_from_r(r), ZeroMean);
}

TEST_CASE("S-transform of beta(1,2) matches the closed resolvent form") {
    // 1 + (F + lambda - 1) / ((1-lambda)(1-F) + F z) at F=2, lambda=3
    // = (3+z)/(1+z)
    auto su = s_from_moment_series(
        moment_series_from_moments(free_binomial_moments<Rational>(Rational(1), Rational(2), 12)));
    TruncatedSeries<Rational> expect =
        zero_extended(TruncatedSeries<Rational>{Rational(3), Rational(1)}, su.s.order()) /
        zero_extended(TruncatedSeries<Rational>{Rational(1), Rational(1)}, su.s.order());
    CHECK(su.s == expect);
}

TEST_CASE("free_mult: S = 1 acts as identity, exact in rational kind") {
    auto mu = two_atoms_q(Rational(1, 2), Rational(1, 3), Rational(2));
    auto m = atom_moments(mu, 12);
    auto s = s_from_moment_series(moment_series_from_moments(m));
    STransform<Rational> one{TruncatedSeries<Rational>::constant(Rational(1), s.s.order())};
    auto back = free_mult(s, one, 10);
    for (int n = 1; n <= 10; ++n) CHECK(back.s[n] == m[static_cast<size_t>(n - 1)]);
}

TEST_CASE("free_mult: nu(3,1) boxtimes beta(1,2) = nu(1,1), the law of V^{1/2}UV^{1/2}") {
    auto sv = s_from_r(r_from_cumulants(free_poisson_cumulants<Rational>(Rational(3), Rational(1), 12)));
    auto su = s_from_moment_series(
        moment_series_from_moments(free_binomial_moments<Rational>(Rational(1), Rational(2), 12)));
    auto prod = free_mult(su, sv, 8);
    auto expect = free_poisson_moments<Rational>(Rational(1), Rational(1), 8);
    for (int n = 1; n <= 8; ++n) CHECK(prod.s[n] == expect[static_cast<size_t>(n - 1)]);
}

TEST_CASE("free_mult agrees with the word engine on random two-atom measures") {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> loc(0.2, 2.0), mass(0.15, 0.85);
    for (int rep = 0; rep < 5; ++rep) {
        SpectralMeasure<double> mu_u, mu_v;
        double a1 = loc(rng), a2 = loc(rng) + 0.3, p = mass(rng);
        mu_u.atoms = {{a1, p}, {a2, 1 - p}};
        mu_u.lo = std::min(a1, a2); mu_u.hi = std::max(a1, a2);
        double b1 = loc(rng), b2 = loc(rng) + 0.4, q = mass(rng);
        mu_v.atoms = {{b1, q}, {b2, 1 - q}};
        mu_v.lo = std::min(b1, b2); mu_v.hi = std::max(b1, b2);

        std::vector<double> mu, mv;
        for (int n = 1; n <= 12; ++n) {
            mu.push_back(measure_moment(mu_u, ElementFn::power(n)));
            mv.push_back(measure_moment(mu_v, ElementFn::power(n)));
        }
        auto su = s_from_moment_series(moment_series_from_moments(mu));
        auto sv = s_from_moment_series(moment_series_from_moments(mv));
        auto prod = free_mult(su, sv, 8);

        FreePairEngine<double> eng(measure_oracle(mu_u), measure_oracle(mu_v));
        for (int n = 1; n <= 8; ++n) {
            std::vector<AlgebraElement> f;
            for (int i = 0; i < n; ++i) {
                f.push_back({Side::U, ElementFn::power(1)});
                f.push_back({Side::V, ElementFn::power(1)});
            }
            double w = eng.word_moment(Word::from_factors(std::move(f)));
            double scale = std::max(1.0, std::abs(w));
            CHECK(std::abs(w - prod.s[n]) <= 1e-10 * scale);
        }
    }
}

TEST_CASE("verify_cauchy_relation: residuals vanish for matched pairs") {
    // point mass at a: exact zeros
    Rational a(5, 2);
    auto mpoint = moment_series_from_moments<Rational>(
        {a, a * a, a * a * a, a * a * a * a, a * a * a * a * a});
    auto rpoint = r_from_cumulants<Rational>({a, Rational(0), Rational(0), Rational(0), Rational(0)});
    for (const auto& res : verify_cauchy_relation(mpoint, rpoint, 5)) CHECK(res == Rational(0));

    // nu(2,1): both sides from the same cumulants, exact zeros to order 10
    auto kappa = free_poisson_cumulants<Rational>(Rational(2), Rational(1), 11);
    auto m = moment_series_from_moments(moments_from_cumulants(kappa));
    auto r = r_from_cumulants(kappa);
    for (const auto& res : verify_cauchy_relation(m, r, 10)) CHECK(res == Rational(0));
}

TEST_CASE("verify_cauchy_relation flags a mismatched pair at order 1") {
    auto m = moment_series_from_moments(free_poisson_moments<Rational>(Rational(2), Rational(1), 10));
    auto r = r_from_cumulants(free_poisson_cumulants<Rational>(Rational(3), Rational(1), 10));
    auto res = verify_cauchy_relation(m, r, 9);
    // moment order n sits at the z^{n+1} coefficient of g(u(z)) - z
    CHECK(res[0] == Rational(0));
    CHECK(res[1] == Rational(0));
    CHECK(res[2] == Rational(-1)); // m1 - kappa1' = 2 - 3
}

TEST_CASE("cauchy relation holds for every law family member, order 12") {
    for (auto [lam, al] : {std::pair{0.5, 1.0}, {1.0, 1.0}, {2.0, 1.0}, {4.0, 0.5}}) {
        auto kappa = free_poisson_cumulants<double>(lam, al, 13);
        auto m = moment_series_from_moments(moments_from_cumulants(kappa));
        auto r = r_from_cumulants(kappa);
        for (double res : verify_cauchy_relation(m, r, 12)) CHECK(std::abs(res) <= 1e-10);
    }
    for (auto [sg, th] : {std::pair{1.0, 2.0}, {2.0, 3.0}, {0.5, 2.0}}) {
        auto mom = free_binomial_moments<double>(sg, th, 13);
        auto m = moment_series_from_moments(mom);
        auto r = r_from_moments(mom);
        for (double res : verify_cauchy_relation(m, r, 12)) CHECK(std::abs(res) <= 1e-10);
    }
}

TEST_CASE("the two S-transform routes agree: R-inverse vs psi-inverse") {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> num(1, 9), den(1, 9);
    for (int rep = 0; rep < 6; ++rep) {
        // random positive-mean rational moment data via random cumulants
        std::vector<Rational> kappa;
        kappa.emplace_back(num(rng), den(rng));  // nonzero mean
        for (int i = 1; i < 10; ++i) kappa.emplace_back(num(rng) - 5, den(rng));
        auto m = moments_from_cumulants(kappa);
        auto via_r = s_from_r(r_from_cumulants(kappa));
        auto via_psi = s_from_moment_series(moment_series_from_moments(m));
        int K = std::min(via_r.s.order(), via_psi.s.order());
        CHECK(truncated(via_r.s, K) == truncated(via_psi.s, K));
    }
}

TEST_CASE("order bookkeeping: free_mult demands enough S coefficients") {
    auto sv = s_from_r(r_from_cumulants(free_poisson_cumulants<Rational>(Rational(3), Rational(1), 4)));
    CHECK_THROWS_AS(free_mult(sv, sv, 12), OrderTooLow);
}

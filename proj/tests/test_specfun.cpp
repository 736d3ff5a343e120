#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rsace/specfun.hpp"
#include "rsace/types.hpp"

using namespace rsace;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n = 20000)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Q(x) from its defining integral of the standard normal density.
double q_by_quadrature(double x)
{
    return simpson([](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * M_PI); }, x, x + 40.0);
}

// exp(-z) I_0(z); large-argument expansion where the product would overflow.
double scaled_i0(double z)
{
    if (z < 500.0) return std::exp(-z) * std::cyl_bessel_i(0.0, z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 8; ++k) {
        term *= (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * z);
        sum += term;
    }
    return sum / std::sqrt(2 * M_PI * z);
}

// x exp(-(x^2 + a^2)/2) I_0(a x), the Rician density integrated by Q_1.
double rician_density(double a, double x) { return x * std::exp(-0.5 * (x - a) * (x - a)) * scaled_i0(a * x); }

// Q_1(a, b) = int_b^inf of the density.
double marcum_by_quadrature(double a, double b)
{
    return simpson([a](double x) { return rician_density(a, x); }, b, b + a + 40.0, 200000);
}

// 1 - Q_1(a, b) = int_0^b of the density.
double marcum_complement_by_quadrature(double a, double b)
{
    return simpson([a](double x) { return rician_density(a, x); }, 0.0, b, 200000);
}

// Poisson mixture of central chi-square CDFs with even dof: P(chi'^2_2(lambda) <= t).
double ncchi2_series(double lambda, double t)
{
    double total = 0.0;
    double pois = std::exp(-lambda / 2);
    for (int j = 0; j < 400; ++j) {
        if (j > 0) pois *= (lambda / 2) / j;
        // P(chi^2_{2(j+1)} <= t) = 1 - exp(-t/2) sum_{i<=j} (t/2)^i / i!
        double term = 1.0, sum = 0.0;
        for (int i = 0; i <= j; ++i) {
            if (i > 0) term *= (t / 2) / i;
            sum += term;
        }
        total += pois * (1.0 - std::exp(-t / 2) * sum);
    }
    return total;
}

} // namespace

TEST_CASE("gaussian tail function")
{
    CHECK(gaussian_q(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gaussian_q(40.0) < 1e-300);
    CHECK(gaussian_q(40.0) >= 0.0);
    // frozen from the quadrature oracle
    CHECK(gaussian_q(1.0) == doctest::Approx(0.158655253931457).epsilon(1e-12));
    CHECK(gaussian_q(1.0) == doctest::Approx(q_by_quadrature(1.0)).epsilon(1e-10));
    CHECK(gaussian_q(-2.0) == doctest::Approx(1.0 - q_by_quadrature(2.0)).epsilon(1e-10));
    CHECK(gaussian_q(5.0) == doctest::Approx(q_by_quadrature(5.0)).epsilon(1e-8));
}

TEST_CASE("inverse gaussian tail")
{
    CHECK(gaussian_q_inv(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(gaussian_q_inv(gaussian_q(1.3)) - 1.3) < 1e-10);
    // bisection on gaussian_q, frozen
    double lo = 0.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) ((gaussian_q(0.5 * (lo + hi)) > 0.1) ? lo : hi) = 0.5 * (lo + hi);
    CHECK(gaussian_q_inv(0.1) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
    CHECK(gaussian_q_inv(0.1) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK_THROWS(gaussian_q_inv(0.0));
    CHECK_THROWS(gaussian_q_inv(1.0));
}

TEST_CASE("marcum Q of order one")
{
    CHECK(marcum_q1(0.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(marcum_q1(3.0, 0.0) == doctest::Approx(1.0));
    CHECK(marcum_q1(1.0, 1.0) == doctest::Approx(marcum_by_quadrature(1.0, 1.0)).epsilon(1e-9));
    // frozen from the quadrature oracle
    CHECK(marcum_q1(1.0, 1.0) == doctest::Approx(0.73287980379678619).epsilon(1e-10));
    for (auto [a, b] : {std::pair{0.5, 3.0}, {4.0, 2.0}, {10.0, 12.0}, {25.0, 20.0}})
        CHECK(marcum_q1(a, b) == doctest::Approx(marcum_by_quadrature(a, b)).epsilon(1e-8));
    // complement stays accurate deep in the lower tail
    const auto pr = marcum_q1_pair(30.0, 20.0);
    CHECK(pr.q + pr.p == doctest::Approx(1.0));
    CHECK(pr.p == doctest::Approx(marcum_complement_by_quadrature(30.0, 20.0)).epsilon(1e-6));

    SUBCASE("monte carlo")
    {
        Rng rng(11);
        std::normal_distribution<double> n01;
        const int N = 1000000;
        int hits = 0;
        for (int i = 0; i < N; ++i) hits += std::hypot(1.0 + n01(rng), n01(rng)) > 1.0;
        const double p = marcum_q1(1.0, 1.0);
        CHECK(std::abs(double(hits) / N - p) <= 3 * std::sqrt(p * (1 - p) / N));
    }
}

TEST_CASE("noncentral chi-square CDF")
{
    NoncentralChi2Params<double> prm{1.0, 1.0, 0.0};
    CHECK(ncchi2_cdf(prm) == 0.0);
    prm.threshold = std::numeric_limits<double>::infinity();
    CHECK(ncchi2_cdf(prm) == 1.0);
    prm.threshold = 1.0;
    // threshold x with scale s maps to 2x/s on the standard chi-square axis
    CHECK(ncchi2_cdf(prm) == doctest::Approx(ncchi2_series(1.0, 2.0)).epsilon(1e-12));
    // frozen from the series oracle
    CHECK(ncchi2_cdf(prm) == doctest::Approx(0.46986963780290475).epsilon(1e-10));
    for (double lam : {0.0, 3.0, 40.0})
        for (double t : {0.1, 2.0, 30.0}) {
            NoncentralChi2Params<double> q{lam, 2.5, t};
            CHECK(ncchi2_cdf(q) == doctest::Approx(ncchi2_series(lam, 2 * t / 2.5)).epsilon(1e-10));
        }

    SUBCASE("empirical CDF of the one-antenna norm")
    {
        // ||f_hat + e||^2 with e ~ CN(0, s): noncentrality 2|f_hat|^2/s, scale s
        Rng rng(12);
        const double s = 1.0, fh2 = 0.5;
        const std::complex<double> fh(std::sqrt(fh2), 0.0);
        const auto p = chi2_params_from_estimate(fh2, s, 1.0);
        CHECK(p.noncentrality == doctest::Approx(1.0));
        const int N = 1000000;
        int below = 0;
        for (int i = 0; i < N; ++i) below += std::norm(fh + draw_cn<double>(rng, s)) <= 1.0;
        const double F = ncchi2_cdf(p);
        CHECK(std::abs(double(below) / N - F) <= 3 * std::sqrt(F * (1 - F) / N));
    }
}

TEST_CASE("noncentral chi-square quantile")
{
    NoncentralChi2Params<double> prm{1.0, 1.0};
    prm.threshold = ncchi2_cdf_inv(0.05, prm);
    CHECK(std::abs(ncchi2_cdf(prm) - 0.05) < 1e-9);
    CHECK(ncchi2_cdf_inv(1e-12, prm) < 1e-9);
    CHECK_THROWS(ncchi2_cdf_inv(0.0, prm));
    CHECK_THROWS(ncchi2_cdf_inv(1.5, prm));

    SUBCASE("quantile of the simulated norm at eps_out / 2")
    {
        // sigma_e^2 = 0.05 as in the default scenario, one antenna (the two-dof law is exact only for K = 1)
        Rng rng(13);
        const double s = 0.05, fh2 = 0.95;
        const auto prm1 = chi2_params_from_estimate(fh2, s);
        const double q = ncchi2_cdf_inv(0.025, prm1);
        const int N = 1000000;
        std::vector<double> v(N);
        const std::complex<double> fh(std::sqrt(fh2), 0.0);
        for (double& x : v) x = std::norm(fh + draw_cn<double>(rng, s));
        std::nth_element(v.begin(), v.begin() + N / 40, v.end());
        const double emp = v[N / 40];
        // quantile standard error ~ sqrt(p(1-p)/N) / density; accept 0.5 % relative
        CHECK(q == doctest::Approx(emp).epsilon(5e-3));
    }
}

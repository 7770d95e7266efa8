#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "csalab/errors.hpp"
#include "csalab/order_stats.hpp"

using namespace csalab;
using namespace csalab::order_stats;

namespace
{
    // Independent oracle: composite Simpson on [-12, 12] of x^k times a density
    // assembled directly from erfc and an integer binomial product.
    double oracle_moment(int rank, int lambda, int power, int intervals = 48000)
    {
        double coef = lambda;
        for (int j = 1; j < rank; ++j)
            coef *= static_cast<double>(lambda - j) / j;
        const auto f = [&](double x) {
            const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
            const double sf = 0.5 * std::erfc(x / std::sqrt(2.0));
            const double phi = std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi);
            return std::pow(x, power) * coef * phi * std::pow(cdf, rank - 1) * std::pow(sf, lambda - rank);
        };
        const double a = -12.0, b = 12.0, h = (b - a) / intervals;
        double s = f(a) + f(b);
        for (int i = 1; i < intervals; ++i)
            s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        return s * h / 3.0;
    }
}

TEST_CASE("density examples")
{
    const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    CHECK(pdf(0.0, 1, 1) == doctest::Approx(phi0).epsilon(1e-14));
    CHECK(pdf(0.0, 1, 2) == doctest::Approx(phi0).epsilon(1e-14));
    CHECK(phi0 == doctest::Approx(0.3989423).epsilon(1e-7));

    const auto q = integrate([](double x) { return pdf(x, 2, 5); }, kDomainLo, kDomainHi);
    CHECK(std::abs(q.value - 1.0) <= 1e-10);
}

TEST_CASE("density is nonnegative and rejects bad ranks")
{
    for (int lambda : {1, 2, 7, 50})
        for (int rank = 1; rank <= lambda; rank += std::max(1, lambda / 5))
            for (double x = -11.5; x <= 11.5; x += 0.5)
                CHECK(pdf(x, rank, lambda) >= 0.0);
    CHECK_THROWS_AS(pdf(0.0, 0, 3), DomainError);
    CHECK_THROWS_AS(pdf(0.0, 4, 3), DomainError);
    CHECK_THROWS_AS(moment(1, 3, 5), DomainError);
    CHECK_THROWS_AS(moment(1, 3, 0), DomainError);
}

TEST_CASE("moment examples")
{
    CHECK(moment(1, 1, 2).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(moment(1, 2, 2).value - 1.0) <= 1e-10);
    // Closed forms for the check only: E N_{1:2} = -1/sqrt(pi), E N_{1:3} = -3/(2 sqrt(pi)).
    CHECK(std::abs(moment(1, 2, 1).value - -1.0 / std::sqrt(std::numbers::pi)) <= 1e-10);
    CHECK(std::abs(moment(1, 3, 1).value - -1.5 / std::sqrt(std::numbers::pi)) <= 1e-10);
    CHECK(moment(1, 2, 1).value == doctest::Approx(-0.5641896).epsilon(1e-7));
    CHECK(moment(1, 3, 1).value == doctest::Approx(-0.8462844).epsilon(1e-7));
    CHECK(moment(1, 2, 1).abs_error_estimate <= 1e-10);
}

TEST_CASE("moments agree with the Simpson oracle")
{
    for (int lambda : {1, 2, 3, 5, 8, 20, 64})
        for (int rank : {1, 2, lambda})
        {
            if (rank > lambda)
                continue;
            for (int k = 1; k <= 4; ++k)
            {
                CAPTURE(lambda);
                CAPTURE(rank);
                CAPTURE(k);
                CHECK(std::abs(moment(rank, lambda, k).value - oracle_moment(rank, lambda, k)) <= 1e-9);
            }
        }
}

TEST_CASE("lambda = 1 reproduces the standard normal moments")
{
    const double expected[] = {0.0, 1.0, 0.0, 3.0};
    for (int k = 1; k <= 4; ++k)
    {
        const auto m = moment(1, 1, k);
        CHECK(std::abs(m.value - expected[k - 1]) <= std::max(m.abs_error_estimate, 1e-12));
    }
}

TEST_CASE("sign facts")
{
    for (int lambda = 2; lambda <= 40; ++lambda)
    {
        CHECK(moment(1, lambda, 1).value < 0.0);
        CHECK(moment(1, lambda, 2).value > 0.0);
        CHECK(moment(1, lambda, 4).value > 0.0);
    }
}

TEST_CASE("recurrence residual examples and range")
{
    CHECK(std::abs(recurrence_residual(2, 2)) <= 1e-8);
    CHECK(std::abs(recurrence_residual(5, 2)) <= 1e-8);
    CHECK(std::abs(recurrence_residual(4, 4)) <= 1e-8);
    for (int lambda = 2; lambda <= 32; ++lambda)
        for (int k = 1; k <= 4; ++k)
            CHECK(std::abs(recurrence_residual(lambda, k)) <= 1e-8);
    CHECK_THROWS_AS(recurrence_residual(1, 2), DomainError);
}

TEST_CASE("second moment of the minimum increases from lambda = 2")
{
    for (int lambda = 2; lambda <= 64; ++lambda)
        CHECK(moment(1, lambda + 1, 2).value > moment(1, lambda, 2).value);
}

TEST_CASE("normal symmetry: E N_{1:l} = -E N_{l:l}")
{
    for (int lambda = 1; lambda <= 30; ++lambda)
        CHECK(std::abs(moment(1, lambda, 1).value + moment(lambda, lambda, 1).value) <= 1e-9);
}

TEST_CASE("sampler agrees with quadrature within 4 standard errors")
{
    const long N = 10'000'000;
    for (int lambda : {2, 8})
    {
        Rng rng(2024, static_cast<std::uint64_t>(lambda));
        double s[9] = {};
        for (long i = 0; i < N; ++i)
        {
            const double x = sample_min(lambda, rng);
            double p = 1.0;
            for (int k = 1; k <= 8; ++k)
                s[k] += (p *= x);
        }
        for (int k = 1; k <= 4; ++k)
        {
            const double mk = s[k] / N;
            const double se = std::sqrt((s[2 * k] / N - mk * mk) / N);
            CAPTURE(lambda);
            CAPTURE(k);
            CHECK(std::abs(mk - moment(1, lambda, k).value) <= 4.0 * se);
        }
    }
}

TEST_CASE("sample_min with lambda = 1 is a plain normal draw")
{
    Rng a(5, 0), b(5, 0);
    for (int i = 0; i < 10; ++i)
        CHECK(sample_min(1, a) == b.normal());
    CHECK_THROWS_AS(sample_min(0, a), DomainError);
}

TEST_CASE("quadrature reports failure with the achieved error")
{
    const auto singular = [](double x) { return 1.0 / std::sqrt(std::abs(x - 0.1)); };
    try
    {
        (void)integrate(singular, -1.0, 1.0, 1e-15, 1e-14);
        FAIL("expected ConvergenceError");
    }
    catch (const ConvergenceError &e)
    {
        CHECK(e.achieved_error() > 1e-14);
    }
}

TEST_CASE("cache is safe under concurrent read-through")
{
    std::vector<std::vector<double>> seen(8);
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < 8; ++w)
            pool.emplace_back([w, &seen] {
                for (int lambda = 100; lambda < 140; ++lambda)
                    seen[w].push_back(moment(1, lambda, 1 + (lambda + w) % 4).value);
            });
    }
    for (int lambda = 100; lambda < 140; ++lambda)
        for (int w = 0; w < 8; ++w)
            CHECK(seen[w][lambda - 100] == moment(1, lambda, 1 + (lambda + w) % 4).value);
    CHECK(cache_size() >= 40);
}

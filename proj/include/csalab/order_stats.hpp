#pragma once

#include <functional>

#include "csalab/rng.hpp"

namespace csalab::order_stats
{
    /// E[N_{rank:lambda}^power] for the rank-th smallest of lambda i.i.d. standard normals.
    struct OrderStatMoment
    {
        int lambda = 1;
        int rank = 1;
        int power = 1;
        double value = 0.0;
        double abs_error_estimate = 0.0;
    };

    /// Integration domain; the order-statistic mass outside it is negligible for lambda <= 1e4.
    inline constexpr double kDomainLo = -12.0;
    inline constexpr double kDomainHi = 12.0;
    inline constexpr double kPanelTolerance = 1e-12;
    inline constexpr double kTotalTolerance = 1e-10;

    /// Standard normal CDF and upper tail, both through erfc so neither loses
    /// precision in its own tail.
    double normal_cdf(double x);
    double normal_sf(double x);
    double normal_pdf(double x);

    /// Density of N_{rank:lambda}. Throws DomainError unless 1 <= rank <= lambda.
    double pdf(double x, int rank, int lambda);

    struct QuadratureResult
    {
        double value = 0.0;
        double abs_error = 0.0;
        int panels = 0;
    };

    /// Adaptive Gauss-Kronrod (7/15) on [lo, hi], bisecting any panel whose
    /// |K15 - G7| exceeds panel_tol. Throws ConvergenceError if the summed
    /// error estimate is above total_tol.
    QuadratureResult integrate(const std::function<double(double)> &f, double lo, double hi,
                               double panel_tol = kPanelTolerance, double total_tol = kTotalTolerance);

    /// Cached, thread-safe read-through. Throws DomainError for rank/power out of range.
    OrderStatMoment moment(int rank, int lambda, int power);

    /// Convenience for the minimum: E[N_{1:lambda}^power].
    inline double min_moment(int lambda, int power) { return moment(1, lambda, power).value; }

    /// (lambda+1) E[g(N_{1:lambda})] - E[g(N_{2:lambda+1})] - lambda E[g(N_{1:lambda+1})], g(x) = x^power.
    /// Zero for every lambda >= 2; throws DomainError for lambda < 2.
    double recurrence_residual(int lambda, int power);

    /// Minimum of lambda independent standard normal draws.
    double sample_min(int lambda, Rng &rng);

    /// Number of (rank, lambda, power) entries currently cached.
    std::size_t cache_size();
}

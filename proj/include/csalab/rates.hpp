#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csalab/params.hpp"

namespace csalab::rates
{
    /// Rates with magnitude at or below this are reported as zero (random-walk regime).
    inline constexpr double kZeroRateTolerance = 1e-10;

    /// Stationary moments of the first path coordinate and the resulting
    /// variance of ln(sigma_{t+1}/sigma_t).
    struct VarianceBreakdown
    {
        double a = 0.0; // 1 - c
        double k4 = 0.0;
        double k31 = 0.0;
        double k22 = 0.0;
        double k211 = 0.0;
        double k1111 = 0.0;
        double fourth_moment_limit = 0.0;
        double second_moment_limit = 0.0;
        double variance = 0.0;
        /// sqrt(variance) / rate_with_cumulation; +inf when the rate is zero.
        double rel_std = 0.0;
        bool rate_is_zero = false;
    };

    struct RateReport
    {
        AlgorithmParams params;
        double rate_no_cumulation = 0.0;
        double rate_with_cumulation = 0.0;
        VarianceBreakdown variance;
        /// lambda = 1: the rate formulas hold but no divergence is guaranteed (needs lambda >= 2).
        bool outside_regime = false;
    };

    /// (E[N_{1:l}^2] - 1) / (2 d_sigma n). Ignores c.
    double rate_no_cumulation(const AlgorithmParams &params);

    /// (2 (1-c) E[N_{1:l}]^2 + c (E[N_{1:l}^2] - 1)) / (2 d_sigma n).
    double rate_with_cumulation(const AlgorithmParams &params);

    /// lim E[p_1^2] = E[N^2] + (2 - 2c)/c E[N]^2.
    double path_second_moment_limit(int lambda, double c);

    /// lim E[p_1^4] with a = 1 - c. Populates a, the k-terms, both moment
    /// limits; variance and rel_std are left zero. Throws DomainError for c
    /// outside (0, 1].
    VarianceBreakdown path_fourth_moment_limit(int lambda, double c);

    /// Var ln(sigma_{t+1}/sigma_t) = c^2/(4 d^2 n^2) (E[p_1^4] - E[p_1^2]^2 + 2(n-1))
    /// at stationarity, plus the relative standard deviation.
    VarianceBreakdown log_step_variance(const AlgorithmParams &params);

    RateReport report(const AlgorithmParams &params);

    /// Cumulation parameter as a function of the dimension: constant c, or c = 1/(1+n^alpha).
    class CPolicy
    {
    public:
        enum class Kind
        {
            constant,
            alpha
        };

        static CPolicy constant(double c);
        static CPolicy alpha(double exponent);

        /// Accepts "constant:<c>" or "alpha:<exponent>". Throws DomainError otherwise.
        static CPolicy parse(std::string_view text);

        double c_at(double n) const;
        Kind kind() const { return kind_; }
        double value() const { return value_; }

        /// Round-trips through parse().
        std::string label() const;

    private:
        CPolicy(Kind kind, double value) : kind_(kind), value_(value) {}

        Kind kind_;
        double value_;
    };

    struct RelStdPoint
    {
        int n = 0;
        double c = 0.0;
        double rel_std = 0.0;
        bool infinite = false;
    };

    std::vector<RelStdPoint> rel_std_curve(int lambda, double d_sigma, const CPolicy &policy,
                                           std::span<const int> n_grid);
}

#include "csalab/rates.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "csalab/errors.hpp"
#include "csalab/order_stats.hpp"

namespace csalab
{
    void AlgorithmParams::validate() const
    {
        if (lambda < 1)
            throw DomainError("lambda must be >= 1");
        if (n < 1)
            throw DomainError("n must be >= 1");
        if (!(c > 0.0 && c <= 1.0))
            throw DomainError("c must lie in (0, 1]");
        if (!(d_sigma > 0.0) || !std::isfinite(d_sigma))
            throw DomainError("d_sigma must be positive and finite");
    }
}

namespace csalab::rates
{
    namespace
    {
        using order_stats::min_moment;

        void check_c(double c)
        {
            if (!(c > 0.0 && c <= 1.0))
                throw DomainError("c must lie in (0, 1]");
        }

        // 1 - a^k for a = 1 - c, factored so small c does not cancel.
        struct OneMinusPowers
        {
            double p1, p2, p3, p4;
            explicit OneMinusPowers(double c)
                : p1(c), p2(c * (2.0 - c)), p3(c * (3.0 - 3.0 * c + c * c)),
                  p4(c * (2.0 - c) * (2.0 - 2.0 * c + c * c)) {}
        };

        double parse_number(std::string_view text)
        {
            const auto slash = text.find('/');
            if (slash != std::string_view::npos)
                return parse_number(text.substr(0, slash)) / parse_number(text.substr(slash + 1));
            double value = 0.0;
            const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc{} || end != text.data() + text.size())
                throw DomainError("not a number: '" + std::string(text) + "'");
            return value;
        }

        std::string shortest(double v)
        {
            char buf[64];
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, end);
        }
    }

    double rate_no_cumulation(const AlgorithmParams &params)
    {
        params.validate();
        return (min_moment(params.lambda, 2) - 1.0) / (2.0 * params.d_sigma * params.n);
    }

    double rate_with_cumulation(const AlgorithmParams &params)
    {
        params.validate();
        const double m1 = min_moment(params.lambda, 1);
        const double m2 = min_moment(params.lambda, 2);
        const double c = params.c;
        return (2.0 * (1.0 - c) * m1 * m1 + c * (m2 - 1.0)) / (2.0 * params.d_sigma * params.n);
    }

    double path_second_moment_limit(int lambda, double c)
    {
        check_c(c);
        const double m1 = min_moment(lambda, 1);
        return min_moment(lambda, 2) + (2.0 - 2.0 * c) / c * m1 * m1;
    }

    VarianceBreakdown path_fourth_moment_limit(int lambda, double c)
    {
        check_c(c);
        const double m1 = min_moment(lambda, 1);
        const double m2 = min_moment(lambda, 2);
        const double m3 = min_moment(lambda, 3);
        const double m4 = min_moment(lambda, 4);

        const double a = 1.0 - c;
        const double a2 = a * a;
        const double a3 = a2 * a;
        const OneMinusPowers q(c);

        VarianceBreakdown out;
        out.a = a;
        out.k4 = m4;
        out.k31 = 4.0 * a * (1.0 + a + 2.0 * a2) / q.p3 * m3 * m1;
        out.k22 = 6.0 * a2 / q.p2 * m2 * m2;
        out.k211 = 12.0 * a3 * (1.0 + 2.0 * a + 3.0 * a2) / (q.p2 * q.p3) * m2 * m1 * m1;
        out.k1111 = 24.0 * a3 * a3 / (q.p1 * q.p2 * q.p3) * m1 * m1 * m1 * m1;
        out.fourth_moment_limit = q.p2 * q.p2 / q.p4 * (out.k4 + out.k31 + out.k22 + out.k211 + out.k1111);
        out.second_moment_limit = path_second_moment_limit(lambda, c);
        return out;
    }

    VarianceBreakdown log_step_variance(const AlgorithmParams &params)
    {
        params.validate();
        auto out = path_fourth_moment_limit(params.lambda, params.c);
        const double n = params.n;
        const double scale = params.c * params.c / (4.0 * params.d_sigma * params.d_sigma * n * n);
        const double p2 = out.second_moment_limit;
        out.variance = scale * (out.fourth_moment_limit - p2 * p2 + 2.0 * (n - 1.0));
        // A negative value can only be cancellation noise around an exact zero.
        if (out.variance < 0.0)
            out.variance = 0.0;

        const double rate = rate_with_cumulation(params);
        if (std::abs(rate) <= kZeroRateTolerance)
        {
            out.rate_is_zero = true;
            out.rel_std = std::numeric_limits<double>::infinity();
        }
        else
        {
            out.rel_std = std::sqrt(out.variance) / rate;
        }
        return out;
    }

    RateReport report(const AlgorithmParams &params)
    {
        RateReport r;
        r.params = params;
        r.rate_no_cumulation = rate_no_cumulation(params);
        r.rate_with_cumulation = rate_with_cumulation(params);
        r.variance = log_step_variance(params);
        r.outside_regime = params.lambda < 2;
        return r;
    }

    CPolicy CPolicy::constant(double c)
    {
        check_c(c);
        return CPolicy(Kind::constant, c);
    }

    CPolicy CPolicy::alpha(double exponent)
    {
        if (!(exponent > 0.0) || !std::isfinite(exponent))
            throw DomainError("policy exponent must be positive");
        return CPolicy(Kind::alpha, exponent);
    }

    CPolicy CPolicy::parse(std::string_view text)
    {
        const auto colon = text.find(':');
        if (colon == std::string_view::npos)
            throw DomainError("policy must be constant:<c> or alpha:<exponent>, got '" + std::string(text) + "'");
        const auto kind = text.substr(0, colon);
        const double value = parse_number(text.substr(colon + 1));
        if (kind == "constant")
            return constant(value);
        if (kind == "alpha")
            return alpha(value);
        throw DomainError("unknown policy kind '" + std::string(kind) + "'");
    }

    double CPolicy::c_at(double n) const
    {
        if (kind_ == Kind::constant)
            return value_;
        return 1.0 / (1.0 + std::pow(n, value_));
    }

    std::string CPolicy::label() const
    {
        return (kind_ == Kind::constant ? "constant:" : "alpha:") + shortest(value_);
    }

    std::vector<RelStdPoint> rel_std_curve(int lambda, double d_sigma, const CPolicy &policy,
                                           std::span<const int> n_grid)
    {
        std::vector<RelStdPoint> curve;
        curve.reserve(n_grid.size());
        for (const int n : n_grid)
        {
            AlgorithmParams p;
            p.lambda = lambda;
            p.n = n;
            p.d_sigma = d_sigma;
            p.c = policy.c_at(n);
            const auto v = log_step_variance(p);
            curve.push_back({n, p.c, v.rel_std, v.rate_is_zero});
        }
        return curve;
    }
}

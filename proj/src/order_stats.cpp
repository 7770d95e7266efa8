#include "csalab/order_stats.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>
#include <tuple>

#include "csalab/errors.hpp"

namespace csalab::order_stats
{
    namespace
    {
        // Kronrod abscissae (positive half) and weights; odd indices are the Gauss nodes.
        constexpr std::array<double, 8> kNodes = {
            0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
        constexpr std::array<double, 8> kKronrodWeights = {
            0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
        constexpr std::array<double, 4> kGaussWeights = {
            0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

        constexpr int kMaxDepth = 40;
        constexpr int kInitialPanels = 48;

        struct PanelEstimate
        {
            double kronrod;
            double error;
        };

        PanelEstimate gauss_kronrod(const std::function<double(double)> &f, double lo, double hi)
        {
            const double center = 0.5 * (lo + hi);
            const double half = 0.5 * (hi - lo);
            const double fc = f(center);
            double kronrod = fc * kKronrodWeights[7];
            double gauss = fc * kGaussWeights[3];
            for (int j = 0; j < 7; ++j)
            {
                const double dx = half * kNodes[j];
                const double pair = f(center - dx) + f(center + dx);
                kronrod += kKronrodWeights[j] * pair;
                if (j % 2 == 1)
                    gauss += kGaussWeights[j / 2] * pair;
            }
            return {kronrod * half, std::abs((kronrod - gauss) * half)};
        }

        void integrate_panel(const std::function<double(double)> &f, double lo, double hi,
                             double panel_tol, int depth, QuadratureResult &acc)
        {
            const auto est = gauss_kronrod(f, lo, hi);
            if (est.error <= panel_tol || depth >= kMaxDepth)
            {
                acc.value += est.kronrod;
                acc.abs_error += est.error;
                ++acc.panels;
                return;
            }
            const double mid = 0.5 * (lo + hi);
            integrate_panel(f, lo, mid, panel_tol, depth + 1, acc);
            integrate_panel(f, mid, hi, panel_tol, depth + 1, acc);
        }

        void check_rank(int rank, int lambda)
        {
            if (lambda < 1 || rank < 1 || rank > lambda)
                throw DomainError("order statistic rank " + std::to_string(rank) +
                                  " outside [1, " + std::to_string(lambda) + "]");
        }

        using CacheKey = std::tuple<int, int, int>;

        struct MomentCache
        {
            std::shared_mutex mutex;
            std::map<CacheKey, OrderStatMoment> entries;
        };

        MomentCache &cache()
        {
            static MomentCache instance;
            return instance;
        }

        OrderStatMoment compute_moment(int rank, int lambda, int power)
        {
            const auto integrand = [=](double x) {
                const double density = pdf(x, rank, lambda);
                double xp = x;
                for (int k = 1; k < power; ++k)
                    xp *= x;
                return xp * density;
            };
            const auto q = integrate(integrand, kDomainLo, kDomainHi);
            return {lambda, rank, power, q.value, q.abs_error};
        }
    }

    double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

    double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

    double normal_pdf(double x)
    {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    }

    double pdf(double x, int rank, int lambda)
    {
        check_rank(rank, lambda);
        const double log_binom = std::lgamma(lambda + 1.0) - std::lgamma(static_cast<double>(rank)) -
                                 std::lgamma(static_cast<double>(lambda - rank + 1));
        double log_density = log_binom - 0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
        if (rank > 1)
            log_density += (rank - 1) * std::log(normal_cdf(x));
        if (lambda > rank)
            log_density += (lambda - rank) * std::log(normal_sf(x));
        return std::exp(log_density);
    }

    QuadratureResult integrate(const std::function<double(double)> &f, double lo, double hi,
                               double panel_tol, double total_tol)
    {
        QuadratureResult acc;
        const double width = (hi - lo) / kInitialPanels;
        for (int p = 0; p < kInitialPanels; ++p)
        {
            const double a = lo + p * width;
            const double b = (p + 1 == kInitialPanels) ? hi : a + width;
            integrate_panel(f, a, b, panel_tol, 0, acc);
        }
        if (!(acc.abs_error <= total_tol))
            throw ConvergenceError("quadrature did not reach tolerance, achieved " +
                                       std::to_string(acc.abs_error),
                                   acc.abs_error);
        return acc;
    }

    OrderStatMoment moment(int rank, int lambda, int power)
    {
        check_rank(rank, lambda);
        if (power < 1 || power > 4)
            throw DomainError("moment power " + std::to_string(power) + " outside [1, 4]");

        auto &c = cache();
        const CacheKey key{rank, lambda, power};
        {
            std::shared_lock lock(c.mutex);
            if (auto it = c.entries.find(key); it != c.entries.end())
                return it->second;
        }
        // Computed outside the lock; concurrent misses on one key produce identical values.
        const auto result = compute_moment(rank, lambda, power);
        std::unique_lock lock(c.mutex);
        return c.entries.try_emplace(key, result).first->second;
    }

    double recurrence_residual(int lambda, int power)
    {
        if (lambda < 2)
            throw DomainError("recurrence requires lambda >= 2");
        return (lambda + 1) * moment(1, lambda, power).value - moment(2, lambda + 1, power).value -
               lambda * moment(1, lambda + 1, power).value;
    }

    double sample_min(int lambda, Rng &rng)
    {
        if (lambda < 1)
            throw DomainError("sample_min requires lambda >= 1");
        double best = rng.normal();
        for (int i = 1; i < lambda; ++i)
            best = std::min(best, rng.normal());
        return best;
    }

    std::size_t cache_size()
    {
        auto &c = cache();
        std::shared_lock lock(c.mutex);
        return c.entries.size();
    }
}

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csalab/es_core.hpp"
#include "csalab/params.hpp"
#include "csalab/rates.hpp"

namespace csalab::experiments
{
    struct BatchOptions
    {
        es::SamplingMode mode = es::SamplingMode::full;
        /// 0 selects std::thread::hardware_concurrency().
        unsigned workers = 0;
        std::size_t memory_budget_bytes = std::size_t{1} << 30;
        /// Over budget: keep trajectories for a deterministic subset of runs
        /// instead of throwing ResourceError.
        bool streaming_fallback = false;
        /// Defaults: 0 for c = 1, ceil(10/c) otherwise.
        std::optional<int> sigma_burn_in;
        /// Default: steps / 4.
        std::optional<int> x_burn_in;
    };

    /// Per-run values kept for every run, whether or not its trajectory is retained.
    struct RunSummary
    {
        double log_sigma_burn = 0.0;
        double log_sigma_final = 0.0;
        double log_absx_burn = 0.0;
        double log_absx_final = 0.0;
    };

    struct TrajectoryBatch
    {
        AlgorithmParams params;
        int runs = 0;
        int steps = 0;
        int sigma_burn_in = 0;
        int x_burn_in = 0;
        bool record_x = false;
        /// Run indices whose full trajectories are stored, ascending.
        std::vector<int> retained;
        /// retained.size() x (steps + 1), row-major, ln(sigma_t / sigma_0).
        std::vector<double> log_sigma;
        /// Same shape, ln|x_{t,1} / x_{0,1}|; NaN marks an underflowed coordinate.
        std::optional<std::vector<double>> log_absx;
        std::vector<RunSummary> summaries;

        std::span<const double> sigma_row(std::size_t i) const;
        std::span<const double> absx_row(std::size_t i) const;
    };

    TrajectoryBatch run_batch(const AlgorithmParams &params, int runs, int steps, bool record_x,
                              const BatchOptions &options = {});

    std::vector<double> default_quantile_levels();

    struct QuantileTable
    {
        std::vector<double> levels;
        /// levels.size() x (steps + 1), row-major.
        std::vector<double> values;
        int steps = 0;

        double at(std::size_t level, int t) const { return values[level * (steps + 1) + t]; }
    };

    /// Linear interpolation between adjacent order statistics, h = (N - 1) p.
    /// Throws DomainError for a level outside (0, 1).
    QuantileTable quantiles(const TrajectoryBatch &batch, std::span<const double> levels);

    struct RateEstimate
    {
        double mean_slope = 0.0;
        double std_error = 0.0;
        double theoretical = 0.0;
        double z_score = 0.0;
        int runs_used = 0;
        int burn_in = 0;
    };

    /// Mean over runs of (ln sigma_T - ln sigma_B) / (T - B) against rate_with_cumulation.
    RateEstimate estimate_rate(const TrajectoryBatch &batch);

    /// Same statistic on ln|x_{t,1}/x_{0,1}| against rate_no_cumulation. Requires c = 1
    /// and a batch recorded with record_x. Runs with a NaN endpoint are excluded.
    RateEstimate estimate_x_rate(const TrajectoryBatch &batch);

    struct StationaryOptions
    {
        es::SamplingMode mode = es::SamplingMode::full;
        unsigned workers = 0;
        /// Independent chains; the work split is fixed, so results do not depend on workers.
        int chains = 100;
    };

    /// Moments collected after burn-in. Standard errors are between-chain (batch means).
    struct StationarySummary
    {
        long samples = 0;
        double increment_mean = 0.0, increment_mean_se = 0.0;
        double increment_var = 0.0, increment_var_se = 0.0;
        double p1_m2 = 0.0, p1_m2_se = 0.0;
        double p1_m4 = 0.0, p1_m4_se = 0.0;
        /// Pooled over coordinates 2..n.
        double other_mean = 0.0, other_mean_se = 0.0;
        double other_var = 0.0, other_var_se = 0.0;
    };

    StationarySummary stationary_statistics(const AlgorithmParams &params, int burn_in, long samples,
                                            const StationaryOptions &options = {});

    struct VarianceEstimate
    {
        double empirical = 0.0;
        double std_error = 0.0;
        double theoretical = 0.0;
        double relative_error = 0.0;
    };

    VarianceEstimate estimate_step_variance(const AlgorithmParams &params, int burn_in, long samples,
                                            const StationaryOptions &options = {});

    int default_burn_in(double c);

    std::vector<rates::CPolicy> default_sweep_policies();
    std::vector<int> default_n_grid();

    struct SweepRow
    {
        std::string policy;
        int n = 0;
        double c = 0.0;
        double rel_std = 0.0;
        bool infinite = false;
    };

    std::vector<SweepRow> figure2_sweep(int lambda, double d_sigma, std::span<const rates::CPolicy> policies,
                                        std::span<const int> n_grid);

    /// Least-squares slope of log(rel_std) against log(n) over rows with n in [n_lo, n_hi].
    double loglog_slope(std::span<const rates::RelStdPoint> curve, double n_lo, double n_hi);
}

#include "csalab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "csalab/errors.hpp"

namespace csalab::experiments
{
    namespace
    {
        constexpr std::uint64_t kStationaryStreamTag = std::uint64_t{1} << 63;

        unsigned resolve_workers(unsigned requested)
        {
            if (requested > 0)
                return requested;
            return std::max(1u, std::thread::hardware_concurrency());
        }

        /// Runs body(i) for i in [0, count); each index is written by exactly one worker.
        template <typename Body>
        void parallel_for(std::size_t count, unsigned workers, Body body)
        {
            workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(count, 1)));
            if (workers <= 1)
            {
                for (std::size_t i = 0; i < count; ++i)
                    body(i);
                return;
            }
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < count; i = next++)
                        body(i);
                });
        }

        double log_abs_ratio(double value, double origin)
        {
            const double ratio = std::abs(value / origin);
            if (!(ratio > 0.0) || !std::isfinite(ratio))
                return std::numeric_limits<double>::quiet_NaN();
            return std::log(ratio);
        }

        struct MeanSe
        {
            double mean = 0.0;
            double se = 0.0;
        };

        MeanSe mean_and_se(std::span<const double> values)
        {
            MeanSe out;
            const double n = static_cast<double>(values.size());
            if (values.empty())
                return out;
            double sum = 0.0;
            for (const double v : values)
                sum += v;
            out.mean = sum / n;
            if (values.size() < 2)
                return out;
            double ss = 0.0;
            for (const double v : values)
                ss += (v - out.mean) * (v - out.mean);
            out.se = std::sqrt(ss / (n - 1.0) / n);
            return out;
        }

        RateEstimate finish_estimate(std::span<const double> slopes, double theoretical, int burn_in)
        {
            const auto ms = mean_and_se(slopes);
            RateEstimate r;
            r.mean_slope = ms.mean;
            r.std_error = ms.se;
            r.theoretical = theoretical;
            r.runs_used = static_cast<int>(slopes.size());
            r.burn_in = burn_in;
            if (r.std_error > 0.0)
                r.z_score = (r.mean_slope - r.theoretical) / r.std_error;
            else
                r.z_score = r.mean_slope == r.theoretical ? 0.0 : std::numeric_limits<double>::infinity();
            return r;
        }
    }

    std::span<const double> TrajectoryBatch::sigma_row(std::size_t i) const
    {
        const auto width = static_cast<std::size_t>(steps) + 1;
        return std::span<const double>(log_sigma).subspan(i * width, width);
    }

    std::span<const double> TrajectoryBatch::absx_row(std::size_t i) const
    {
        const auto width = static_cast<std::size_t>(steps) + 1;
        return std::span<const double>(*log_absx).subspan(i * width, width);
    }

    int default_burn_in(double c)
    {
        if (c >= 1.0)
            return 0;
        return static_cast<int>(std::ceil(10.0 / c));
    }

    TrajectoryBatch run_batch(const AlgorithmParams &params, int runs, int steps, bool record_x,
                              const BatchOptions &options)
    {
        params.validate();
        if (runs < 1 || steps < 1)
            throw DomainError("run_batch needs runs >= 1 and steps >= 1");

        TrajectoryBatch batch;
        batch.params = params;
        batch.runs = runs;
        batch.steps = steps;
        batch.record_x = record_x;
        batch.sigma_burn_in = std::clamp(options.sigma_burn_in.value_or(default_burn_in(params.c)), 0, steps - 1);
        batch.x_burn_in = std::clamp(options.x_burn_in.value_or(steps / 4), 0, steps - 1);

        const std::size_t width = static_cast<std::size_t>(steps) + 1;
        const std::size_t row_bytes = width * sizeof(double) * (record_x ? 2 : 1);
        const std::size_t affordable = options.memory_budget_bytes / row_bytes;
        if (affordable >= static_cast<std::size_t>(runs))
        {
            batch.retained.resize(runs);
            for (int r = 0; r < runs; ++r)
                batch.retained[r] = r;
        }
        else if (!options.streaming_fallback)
        {
            throw ResourceError("runs x steps exceeds the memory budget of " +
                                std::to_string(options.memory_budget_bytes) + " bytes");
        }
        else if (affordable > 0)
        {
            // Bottom-k on a seed-dependent hash of the run index: a fixed subset, independent of scheduling.
            std::vector<std::pair<std::uint64_t, int>> priority(runs);
            for (int r = 0; r < runs; ++r)
                priority[r] = {mix64(params.seed ^ mix64(static_cast<std::uint64_t>(r) + 1)), r};
            std::nth_element(priority.begin(), priority.begin() + static_cast<std::ptrdiff_t>(affordable), priority.end());
            for (std::size_t k = 0; k < affordable; ++k)
                batch.retained.push_back(priority[k].second);
            std::sort(batch.retained.begin(), batch.retained.end());
        }

        std::vector<int> row_of(runs, -1);
        for (std::size_t i = 0; i < batch.retained.size(); ++i)
            row_of[batch.retained[i]] = static_cast<int>(i);

        batch.log_sigma.assign(batch.retained.size() * width, 0.0);
        if (record_x)
            batch.log_absx.emplace(batch.retained.size() * width, 0.0);
        batch.summaries.resize(runs);

        parallel_for(static_cast<std::size_t>(runs), options.workers, [&](std::size_t run) {
            Rng rng(params.seed, run);
            auto state = es::init_state(params, rng);
            const double x_origin = state.x[0];
            es::SelectedStep scratch;
            const int row = row_of[run];
            double *sigma_row = row >= 0 ? batch.log_sigma.data() + row * width : nullptr;
            double *absx_row = (row >= 0 && record_x) ? batch.log_absx->data() + row * width : nullptr;
            auto &summary = batch.summaries[run];

            for (int t = 1; t <= steps; ++t)
            {
                es::step(state, params, rng, scratch, options.mode);
                if (!record_x)
                {
                    // x is not observed: re-centre so long runs cannot overflow sigma.
                    std::fill(state.x.begin(), state.x.end(), 0.0);
                    state.sigma = 1.0;
                }
                const double ls = state.log_sigma;
                const double lx = record_x ? log_abs_ratio(state.x[0], x_origin) : 0.0;
                if (sigma_row)
                    sigma_row[t] = ls;
                if (absx_row)
                    absx_row[t] = lx;
                if (t == batch.sigma_burn_in)
                    summary.log_sigma_burn = ls;
                if (t == batch.x_burn_in)
                    summary.log_absx_burn = lx;
            }
            summary.log_sigma_final = state.log_sigma;
            summary.log_absx_final = record_x ? log_abs_ratio(state.x[0], x_origin) : 0.0;
        });
        return batch;
    }

    std::vector<double> default_quantile_levels()
    {
        return {1e-4, 1e-3, 1e-2, 1e-1, 0.5, 0.9, 0.99, 0.999, 0.9999};
    }

    QuantileTable quantiles(const TrajectoryBatch &batch, std::span<const double> levels)
    {
        for (const double p : levels)
            if (!(p > 0.0 && p < 1.0))
                throw DomainError("quantile level must lie in (0, 1)");
        if (batch.retained.empty())
            throw DomainError("batch holds no trajectories");

        QuantileTable table;
        table.levels.assign(levels.begin(), levels.end());
        table.steps = batch.steps;
        const std::size_t width = static_cast<std::size_t>(batch.steps) + 1;
        table.values.assign(levels.size() * width, 0.0);

        const std::size_t rows = batch.retained.size();
        parallel_for(width, 0, [&](std::size_t t) {
            std::vector<double> column(rows);
            for (std::size_t r = 0; r < rows; ++r)
                column[r] = batch.log_sigma[r * width + t];
            std::sort(column.begin(), column.end());
            for (std::size_t l = 0; l < levels.size(); ++l)
            {
                const double h = static_cast<double>(rows - 1) * levels[l];
                const auto lo = static_cast<std::size_t>(std::floor(h));
                const std::size_t hi = std::min(lo + 1, rows - 1);
                table.values[l * width + t] = column[lo] + (h - static_cast<double>(lo)) * (column[hi] - column[lo]);
            }
        });
        return table;
    }

    RateEstimate estimate_rate(const TrajectoryBatch &batch)
    {
        if (!(std::pow(1.0 - batch.params.c, batch.steps) < 1e-6))
            throw DomainError("steps too short for the path transient: need (1-c)^steps < 1e-6");
        const double span = batch.steps - batch.sigma_burn_in;
        std::vector<double> slopes;
        slopes.reserve(batch.summaries.size());
        for (const auto &s : batch.summaries)
            slopes.push_back((s.log_sigma_final - s.log_sigma_burn) / span);
        return finish_estimate(slopes, rates::rate_with_cumulation(batch.params), batch.sigma_burn_in);
    }

    RateEstimate estimate_x_rate(const TrajectoryBatch &batch)
    {
        if (batch.params.c != 1.0)
            throw DomainError("x divergence rate is only defined without cumulation (c = 1)");
        if (!batch.record_x)
            throw DomainError("batch was run without record_x");
        const double span = batch.steps - batch.x_burn_in;
        std::vector<double> slopes;
        slopes.reserve(batch.summaries.size());
        for (const auto &s : batch.summaries)
        {
            const double slope = (s.log_absx_final - s.log_absx_burn) / span;
            if (std::isfinite(slope))
                slopes.push_back(slope);
        }
        return finish_estimate(slopes, rates::rate_no_cumulation(batch.params), batch.x_burn_in);
    }

    StationarySummary stationary_statistics(const AlgorithmParams &params, int burn_in, long samples,
                                            const StationaryOptions &options)
    {
        params.validate();
        const int chains = options.chains;
        if (chains < 2 || samples < chains || burn_in < 0)
            throw DomainError("stationary_statistics needs chains >= 2, samples >= chains, burn_in >= 0");
        const long per_chain = (samples + chains - 1) / chains;

        struct ChainStats
        {
            double inc_mean, inc_var, p1_m2, p1_m4, other_mean, other_var;
        };
        std::vector<ChainStats> stats(chains);

        parallel_for(static_cast<std::size_t>(chains), options.workers, [&](std::size_t k) {
            Rng rng(params.seed, kStationaryStreamTag | k);
            auto state = es::init_state(params, rng);
            es::SelectedStep scratch;
            // Selection on a linear function ignores translation and scale of the parent.
            // Re-centring each step keeps the comparison exact where sigma would overflow.
            const auto advance = [&] {
                es::step(state, params, rng, scratch, options.mode);
                std::fill(state.x.begin(), state.x.end(), 0.0);
                state.sigma = 1.0;
            };
            for (int t = 0; t < burn_in; ++t)
                advance();

            double inc_mean = 0.0, inc_m2 = 0.0;
            long double p2 = 0.0, p4 = 0.0, o1 = 0.0, o2 = 0.0;
            for (long i = 0; i < per_chain; ++i)
            {
                const double before = state.log_sigma;
                advance();
                const double inc = state.log_sigma - before;
                const double delta = inc - inc_mean;
                inc_mean += delta / static_cast<double>(i + 1);
                inc_m2 += delta * (inc - inc_mean);

                const double p1 = state.path[0];
                p2 += p1 * p1;
                p4 += p1 * p1 * p1 * p1;
                for (std::size_t j = 1; j < state.path.size(); ++j)
                {
                    o1 += state.path[j];
                    o2 += state.path[j] * state.path[j];
                }
            }
            const double m = static_cast<double>(per_chain);
            const double others = m * static_cast<double>(state.path.size() - 1);
            ChainStats s{};
            s.inc_mean = inc_mean;
            s.inc_var = per_chain > 1 ? inc_m2 / (m - 1.0) : 0.0;
            s.p1_m2 = static_cast<double>(p2 / m);
            s.p1_m4 = static_cast<double>(p4 / m);
            if (others > 0)
            {
                s.other_mean = static_cast<double>(o1 / others);
                s.other_var = static_cast<double>(o2 / others) - s.other_mean * s.other_mean;
            }
            stats[k] = s;
        });

        const auto collect = [&](auto field) {
            std::vector<double> v(chains);
            for (int k = 0; k < chains; ++k)
                v[k] = stats[k].*field;
            return mean_and_se(v);
        };

        StationarySummary out;
        out.samples = per_chain * chains;
        const auto inc_mean = collect(&ChainStats::inc_mean);
        out.increment_mean = inc_mean.mean;
        out.increment_mean_se = inc_mean.se;

        // Pooled variance: within-chain variances plus the spread of chain means.
        const auto within = collect(&ChainStats::inc_var);
        double between = 0.0;
        for (const auto &s : stats)
            between += (s.inc_mean - inc_mean.mean) * (s.inc_mean - inc_mean.mean);
        const double total = static_cast<double>(out.samples);
        const double m = static_cast<double>(per_chain);
        out.increment_var = ((m - 1.0) * chains * within.mean + m * between) / (total - 1.0);
        out.increment_var_se = within.se;

        const auto p2 = collect(&ChainStats::p1_m2);
        const auto p4 = collect(&ChainStats::p1_m4);
        const auto om = collect(&ChainStats::other_mean);
        const auto ov = collect(&ChainStats::other_var);
        out.p1_m2 = p2.mean, out.p1_m2_se = p2.se;
        out.p1_m4 = p4.mean, out.p1_m4_se = p4.se;
        out.other_mean = om.mean, out.other_mean_se = om.se;
        out.other_var = ov.mean, out.other_var_se = ov.se;
        return out;
    }

    VarianceEstimate estimate_step_variance(const AlgorithmParams &params, int burn_in, long samples,
                                            const StationaryOptions &options)
    {
        const auto stats = stationary_statistics(params, burn_in, samples, options);
        VarianceEstimate out;
        out.empirical = stats.increment_var;
        out.std_error = stats.increment_var_se;
        out.theoretical = rates::log_step_variance(params).variance;
        out.relative_error = (out.empirical - out.theoretical) / out.theoretical;
        return out;
    }

    std::vector<rates::CPolicy> default_sweep_policies()
    {
        using rates::CPolicy;
        return {CPolicy::constant(1.0),   CPolicy::constant(0.5),   CPolicy::constant(0.2),
                CPolicy::alpha(1.0 / 4.0), CPolicy::alpha(1.0 / 3.0), CPolicy::alpha(1.0 / 2.0),
                CPolicy::alpha(1.0)};
    }

    std::vector<int> default_n_grid()
    {
        std::vector<int> grid;
        for (int k = 1; k <= 24; ++k)
        {
            const int n = static_cast<int>(std::lround(std::pow(10.0, k / 4.0)));
            if (grid.empty() || grid.back() != n)
                grid.push_back(n);
        }
        return grid;
    }

    std::vector<SweepRow> figure2_sweep(int lambda, double d_sigma, std::span<const rates::CPolicy> policies,
                                        std::span<const int> n_grid)
    {
        std::vector<SweepRow> rows;
        for (const auto &policy : policies)
        {
            const auto label = policy.label();
            for (const auto &pt : rates::rel_std_curve(lambda, d_sigma, policy, n_grid))
                rows.push_back({label, pt.n, pt.c, pt.rel_std, pt.infinite});
        }
        return rows;
    }

    double loglog_slope(std::span<const rates::RelStdPoint> curve, double n_lo, double n_hi)
    {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int count = 0;
        for (const auto &pt : curve)
        {
            if (pt.n < n_lo || pt.n > n_hi || pt.infinite || !(pt.rel_std > 0.0))
                continue;
            const double x = std::log(static_cast<double>(pt.n));
            const double y = std::log(pt.rel_std);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
            ++count;
        }
        if (count < 2)
            throw DomainError("need at least two finite points for a slope");
        return (count * sxy - sx * sy) / (count * sxx - sx * sx);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csalab/errors.hpp"
#include "csalab/experiments.hpp"

using namespace csalab;
using namespace csalab::experiments;

namespace
{
    AlgorithmParams make(int lambda, int n, double c, std::uint64_t seed = 7)
    {
        AlgorithmParams p;
        p.lambda = lambda;
        p.n = n;
        p.c = c;
        p.seed = seed;
        return p;
    }

    const BatchOptions marginal{.mode = es::SamplingMode::marginal};
}

TEST_CASE("run_batch replicates the per-run stream")
{
    const auto p = make(1, 3, 0.5, 11);
    const auto batch = run_batch(p, 2, 1, true, {.mode = es::SamplingMode::full, .workers = 1});
    REQUIRE(batch.retained == std::vector<int>{0, 1});
    for (int r = 0; r < 2; ++r)
    {
        Rng rng(p.seed, r);
        auto s = es::init_state(p, rng);
        es::step(s, p, rng);
        CHECK(batch.sigma_row(r)[0] == 0.0);
        CHECK(batch.sigma_row(r)[1] == doctest::Approx(s.log_sigma).epsilon(1e-15));
        CHECK(batch.absx_row(r)[1] == doctest::Approx(std::log(std::abs(s.x[0]))).epsilon(1e-15));
    }
}

TEST_CASE("results do not depend on the worker count")
{
    const auto p = make(8, 10, 0.3);
    BatchOptions one{.workers = 1}, four{.workers = 4};
    const auto a = run_batch(p, 37, 50, true, one);
    const auto b = run_batch(p, 37, 50, true, four);
    CHECK(a.log_sigma == b.log_sigma);
    CHECK(*a.log_absx == *b.log_absx);
    for (int r = 0; r < 37; ++r)
        CHECK(a.sigma_row(r)[0] == 0.0);
}

TEST_CASE("memory budget")
{
    const auto p = make(8, 20, 1.0);
    BatchOptions tight = marginal;
    tight.memory_budget_bytes = 64 * 1024;
    CHECK_THROWS_AS(run_batch(p, 400, 100, false, tight), ResourceError);

    tight.streaming_fallback = true;
    const auto streamed = run_batch(p, 400, 100, false, tight);
    const auto full = run_batch(p, 400, 100, false, marginal);
    CHECK(streamed.retained.size() < 400);
    CHECK(!streamed.retained.empty());
    CHECK(std::is_sorted(streamed.retained.begin(), streamed.retained.end()));
    const auto rs = estimate_rate(streamed), rf = estimate_rate(full);
    CHECK(rs.mean_slope == rf.mean_slope);
    CHECK(rs.runs_used == 400);
    // Retained rows are the same trajectories as in the full batch.
    for (std::size_t i = 0; i < streamed.retained.size(); ++i)
    {
        const auto row = streamed.sigma_row(i);
        const auto ref = full.sigma_row(streamed.retained[i]);
        CHECK(std::equal(row.begin(), row.end(), ref.begin()));
    }
}

TEST_CASE("quantiles")
{
    const auto levels = default_quantile_levels();
    CHECK(levels.size() == 9);
    CHECK(std::is_sorted(levels.begin(), levels.end()));

    const auto p = make(8, 5, 0.5);
    SUBCASE("two-run median is the midpoint")
    {
        const auto batch = run_batch(p, 2, 20, false);
        const double half[] = {0.5};
        const auto q = quantiles(batch, half);
        for (int t = 0; t <= 20; ++t)
            CHECK(q.at(0, t) == doctest::Approx(0.5 * (batch.sigma_row(0)[t] + batch.sigma_row(1)[t])));
    }
    SUBCASE("single run collapses all levels")
    {
        const auto batch = run_batch(p, 1, 20, false);
        const auto q = quantiles(batch, levels);
        for (std::size_t l = 0; l < levels.size(); ++l)
            for (int t = 0; t <= 20; ++t)
                CHECK(q.at(l, t) == batch.sigma_row(0)[t]);
    }
    SUBCASE("monotone in the level")
    {
        const auto batch = run_batch(p, 101, 30, false);
        const auto q = quantiles(batch, levels);
        for (int t = 0; t <= 30; ++t)
            for (std::size_t l = 1; l < levels.size(); ++l)
                CHECK(q.at(l - 1, t) <= q.at(l, t));
    }
    SUBCASE("bad levels")
    {
        const auto batch = run_batch(p, 3, 5, false);
        for (double bad : {0.0, 1.0, -0.1, 1.5})
        {
            const double lv[] = {bad};
            CHECK_THROWS_AS(quantiles(batch, lv), DomainError);
        }
    }
}

TEST_CASE("quantile envelopes of ln sigma")
{
    const auto levels = default_quantile_levels();
    const auto wide = quantiles(run_batch(make(8, 20, 1.0), 5001, 1000, false, marginal), levels);
    const auto narrow = quantiles(run_batch(make(8, 20, 1.0 / std::sqrt(20.0)), 5001, 1000, false, marginal), levels);
    const std::size_t top = levels.size() - 1;
    CHECK(narrow.at(top, 1000) - narrow.at(0, 1000) < wide.at(top, 1000) - wide.at(0, 1000));
    for (std::size_t l = 0; l < levels.size(); ++l)
    {
        CAPTURE(levels[l]);
        CHECK(wide.at(l, 1000) > wide.at(l, 500));
        CHECK(wide.at(l, 500) > wide.at(l, 0));
    }
}

TEST_CASE("log step-size rate")
{
    SUBCASE("c = 1/sqrt(20)")
    {
        const auto batch = run_batch(make(8, 20, 1.0 / std::sqrt(20.0)), 1000, 2000, false, marginal);
        const auto r = estimate_rate(batch);
        CHECK(r.burn_in == default_burn_in(1.0 / std::sqrt(20.0)));
        CHECK(r.theoretical == doctest::Approx(rates::rate_with_cumulation(batch.params)));
        CHECK(std::abs(r.z_score) <= 3.0);
    }
    SUBCASE("marginal and full sampling agree")
    {
        const auto p = make(5, 8, 1.0);
        const auto rm = estimate_rate(run_batch(p, 600, 400, false, marginal));
        const auto rf = estimate_rate(run_batch(p, 600, 400, false));
        CHECK(std::abs(rm.mean_slope - rf.mean_slope) <= 3.0 * std::hypot(rm.std_error, rf.std_error));
    }
    SUBCASE("explicit burn-in")
    {
        BatchOptions opt = marginal;
        opt.sigma_burn_in = 0;
        const auto r = estimate_rate(run_batch(make(8, 20, 0.5), 10, 100, false, opt));
        CHECK(r.burn_in == 0);
    }
    SUBCASE("too short for the path to forget its start")
    {
        CHECK_THROWS_AS(estimate_rate(run_batch(make(8, 20, 0.001), 4, 100, false, marginal)), DomainError);
    }
    CHECK(default_burn_in(1.0) == 0);
    CHECK(default_burn_in(0.5) == 20);
    CHECK(default_burn_in(0.3) == 34);
}

TEST_CASE("log distance rate without cumulation")
{
    SUBCASE("lambda = 8, n = 20")
    {
        const auto r = estimate_x_rate(run_batch(make(8, 20, 1.0), 1000, 1000, true, marginal));
        CHECK(r.theoretical == doctest::Approx(rates::rate_no_cumulation(make(8, 20, 1.0))));
        CHECK(std::abs(r.z_score) <= 3.0);
    }
    SUBCASE("lambda = 3, n = 5")
    {
        const auto r = estimate_x_rate(run_batch(make(3, 5, 1.0), 1000, 1000, true, marginal));
        CHECK(std::abs(r.z_score) <= 3.0);
    }
    SUBCASE("lambda = 2: zero drift, slope bias decays with the horizon")
    {
        const auto short_run = estimate_x_rate(run_batch(make(2, 20, 1.0), 2000, 200, true, marginal));
        const auto long_run = estimate_x_rate(run_batch(make(2, 20, 1.0), 2000, 3200, true, marginal));
        CHECK(std::abs(short_run.theoretical) <= 1e-10);
        CHECK(short_run.mean_slope > 0.0);
        CHECK(long_run.mean_slope > 0.0);
        CHECK(long_run.mean_slope < short_run.mean_slope);
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(estimate_x_rate(run_batch(make(8, 20, 0.5), 4, 100, true)), DomainError);
        CHECK_THROWS_AS(estimate_x_rate(run_batch(make(8, 20, 1.0), 4, 100, false)), DomainError);
    }
}

TEST_CASE("stationary statistics")
{
    SUBCASE("lambda = 1 step variance")
    {
        const auto v = estimate_step_variance(make(1, 20, 1.0), 0, 200000, {.mode = es::SamplingMode::marginal});
        CHECK(v.theoretical == doctest::Approx(0.025).epsilon(1e-12));
        CHECK(std::abs(v.empirical - v.theoretical) <= 4.0 * v.std_error);
    }
    SUBCASE("non-selected coordinates are standard normal")
    {
        const auto s = stationary_statistics(make(8, 10, 0.3), 200, 100000, {.mode = es::SamplingMode::marginal});
        CHECK(std::abs(s.other_mean) <= 4.0 * s.other_mean_se);
        CHECK(std::abs(s.other_var - 1.0) <= 4.0 * s.other_var_se);
        CHECK(std::abs(s.p1_m2 - rates::path_second_moment_limit(8, 0.3)) <= 4.0 * s.p1_m2_se);
        CHECK(std::abs(s.p1_m4 - rates::path_fourth_moment_limit(8, 0.3).fourth_moment_limit) <= 4.0 * s.p1_m4_se);
    }
    SUBCASE("independent of the worker count")
    {
        const auto p = make(4, 6, 0.5);
        const auto a = stationary_statistics(p, 50, 20000, {.workers = 1});
        const auto b = stationary_statistics(p, 50, 20000, {.workers = 3});
        CHECK(a.increment_mean == b.increment_mean);
        CHECK(a.increment_var == b.increment_var);
        CHECK(a.p1_m4 == b.p1_m4);
        CHECK(a.samples == b.samples);
    }
}

TEST_CASE("relative standard deviation sweep")
{
    const auto policies = default_sweep_policies();
    const auto grid = default_n_grid();
    CHECK(grid.front() == 2);
    CHECK(grid.back() == 1000000);
    CHECK(std::adjacent_find(grid.begin(), grid.end()) == grid.end());

    const auto rows = figure2_sweep(8, 1.0, policies, grid);
    CHECK(rows.size() == policies.size() * grid.size());
    for (const auto &row : rows)
    {
        CHECK(row.rel_std > 0.0);
        CHECK(!row.infinite);
    }

    const auto slope_of = [&](const rates::CPolicy &policy) {
        const auto curve = rates::rel_std_curve(8, 1.0, policy, grid);
        return loglog_slope(curve, 1e4, 1e6);
    };
    CHECK(slope_of(rates::CPolicy::constant(0.2)) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(slope_of(rates::CPolicy::alpha(0.25)) == doctest::Approx(0.25).epsilon(0.08));
    CHECK(slope_of(rates::CPolicy::alpha(1.0)) < 0.0);

    const rates::CPolicy unit[] = {rates::CPolicy::constant(1.0)};
    const int small[] = {5, 20};
    for (const auto &row : figure2_sweep(2, 1.0, unit, small))
        CHECK(row.infinite);

    const rates::RelStdPoint lone[] = {{10, 0.5, 1.0, false}};
    CHECK_THROWS_AS(loglog_slope(lone, 1, 100), DomainError);
}

TEST_CASE("long runs past the floating-point range of sigma")
{
    // ln sigma passes 1000, far beyond where sigma itself overflows.
    const auto p = make(4, 5, 0.5);
    const int horizon = static_cast<int>(std::ceil(1000.0 / rates::rate_with_cumulation(p)));
    CAPTURE(horizon);

    const auto s = stationary_statistics(p, horizon, 100 * 200, {.workers = 1});
    CHECK(std::abs(s.p1_m2 - rates::path_second_moment_limit(4, 0.5)) <= 4.0 * s.p1_m2_se);
    CHECK(std::abs(s.increment_mean - rates::rate_with_cumulation(p)) <= 4.0 * s.increment_mean_se);

    const auto batch = run_batch(p, 20, horizon, false, {.workers = 1});
    const auto r = estimate_rate(batch);
    CHECK(std::isfinite(r.mean_slope));
    CHECK(std::abs(r.z_score) <= 4.0);
    for (const auto &summary : batch.summaries)
        CHECK(summary.log_sigma_final > 700.0);
}

#include "csalab/validation.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "csalab/cli.hpp"
#include "csalab/es_core.hpp"
#include "csalab/experiments.hpp"
#include "csalab/order_stats.hpp"
#include "csalab/rates.hpp"

namespace csalab::validation
{
    namespace
    {
        using experiments::BatchOptions;
        using experiments::RateEstimate;
        using order_stats::min_moment;

        std::string fmt(const char *pattern, auto... args)
        {
            char buf[512];
            std::snprintf(buf, sizeof buf, pattern, args...);
            return buf;
        }

        AlgorithmParams make(int lambda, int n, double c, std::uint64_t seed)
        {
            AlgorithmParams p;
            p.lambda = lambda;
            p.n = n;
            p.c = c;
            p.d_sigma = 1.0;
            p.seed = seed;
            return p;
        }

        AlgorithmParams theory_side(AlgorithmParams p, const ValidationOptions &o)
        {
            p.d_sigma *= o.dsigma_perturbation;
            return p;
        }

        struct BatchSize
        {
            int runs;
            int steps;
        };

        BatchSize sized(const ValidationOptions &o, int runs, int steps)
        {
            return o.quick ? BatchSize{runs / 4, steps / 2} : BatchSize{runs, steps};
        }

        double z_against(const RateEstimate &e, double theoretical)
        {
            return (e.mean_slope - theoretical) / e.std_error;
        }

        CheckResult result(std::string id, std::string name, bool passed, std::string detail)
        {
            while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';'))
                detail.pop_back();
            return {std::move(id), std::move(name), passed, std::move(detail)};
        }

        std::vector<CheckResult> recurrence(const ValidationOptions &)
        {
            double worst = 0.0;
            int worst_lambda = 0, worst_k = 0;
            for (int lambda = 2; lambda <= 32; ++lambda)
                for (int k = 1; k <= 4; ++k)
                {
                    const double r = std::abs(order_stats::recurrence_residual(lambda, k));
                    if (r >= worst)
                        worst = r, worst_lambda = lambda, worst_k = k;
                }
            return {result("1", "order-statistic recurrence", worst <= 1e-8,
                           fmt("max |residual| = %.3e at lambda=%d k=%d (tol 1e-8)", worst, worst_lambda, worst_k))};
        }

        std::vector<CheckResult> monotonicity(const ValidationOptions &)
        {
            bool increasing = true;
            int first_bad = 0;
            for (int lambda = 2; lambda <= 64 && increasing; ++lambda)
                if (!(min_moment(lambda + 1, 2) > min_moment(lambda, 2)))
                    increasing = false, first_bad = lambda;
            const double d1 = std::abs(min_moment(1, 2) - 1.0);
            const double d2 = std::abs(min_moment(2, 2) - 1.0);
            const bool pass = increasing && d1 <= 1e-10 && d2 <= 1e-10;
            return {result("2", "second-moment monotonicity", pass,
                           increasing ? fmt("increasing on 2..65; |E N11^2 - 1| = %.2e, |E N12^2 - 1| = %.2e", d1, d2)
                                      : fmt("not increasing at lambda=%d", first_bad))};
        }

        std::vector<CheckResult> no_cumulation_rate(const ValidationOptions &o)
        {
            const auto size = sized(o, 1000, 2000);
            bool pass = true;
            std::string detail;
            for (const auto &[lambda, n] : {std::pair{3, 5}, std::pair{8, 20}})
            {
                const auto p = make(lambda, n, 1.0, o.seed + 3);
                const auto batch = experiments::run_batch(p, size.runs, size.steps, false, {.workers = o.workers});
                const auto est = experiments::estimate_rate(batch);
                const double theo = rates::rate_no_cumulation(theory_side(p, o));
                const double z = z_against(est, theo);
                pass = pass && std::abs(z) <= 3.0;
                detail += fmt("(l=%d,n=%d) slope %.6f theory %.6f z %+.2f; ", lambda, n, est.mean_slope, theo, z);
            }
            return {result("3", "rate without cumulation", pass, detail)};
        }

        std::vector<CheckResult> random_walk(const ValidationOptions &o)
        {
            const auto size = sized(o, 1000, 2000);
            bool pass = true;
            std::string detail;
            for (const int lambda : {1, 2})
            {
                const auto p = make(lambda, 20, 1.0, o.seed + 4);
                const auto batch = experiments::run_batch(p, size.runs, size.steps, false, {.workers = o.workers});
                const auto est = experiments::estimate_rate(batch);
                const double z = est.mean_slope / est.std_error;
                pass = pass && std::abs(z) <= 3.0;
                detail += fmt("(l=%d) slope %.2e z %+.2f; ", lambda, est.mean_slope, z);
            }
            // lambda = 1: increments are (chi2_n/n - 1)/(2 d), mean 0, variance 1/(2 n d^2).
            const auto p = make(1, 20, 1.0, o.seed + 40);
            const long samples = static_cast<long>(size.runs) * size.steps;
            const auto st = experiments::stationary_statistics(p, 0, samples, {.workers = o.workers, .chains = size.runs});
            const auto th = theory_side(p, o);
            const double var_anchor = 1.0 / (2.0 * th.n * th.d_sigma * th.d_sigma);
            const double z_mean = st.increment_mean / st.increment_mean_se;
            const double rel = st.increment_var / var_anchor - 1.0;
            pass = pass && std::abs(z_mean) <= 3.0 && std::abs(rel) <= 0.05;
            detail += fmt("(l=1 increments) mean z %+.2f, var %.5f vs %.5f (rel %+.2f%%)", z_mean, st.increment_var,
                          var_anchor, 100.0 * rel);
            return {result("4", "random-walk regime", pass, detail)};
        }

        std::vector<CheckResult> cumulation_rate(const ValidationOptions &o)
        {
            const auto size = sized(o, 1000, 3000);
            bool pass = true;
            std::string detail;
            struct Case
            {
                int lambda, n;
                double c;
            };
            for (const auto cs : {Case{8, 20, 1.0 / std::sqrt(20.0)}, Case{2, 10, 0.5}})
            {
                const auto p = make(cs.lambda, cs.n, cs.c, o.seed + 5);
                const auto batch = experiments::run_batch(p, size.runs, size.steps, false, {.workers = o.workers});
                const auto est = experiments::estimate_rate(batch);
                const auto th = theory_side(p, o);
                const double theo = rates::rate_with_cumulation(th);
                const double z = z_against(est, theo);
                pass = pass && std::abs(z) <= 3.0;
                if (cs.lambda == 2)
                {
                    const double m1 = min_moment(2, 1);
                    const double reduced = (1.0 - cs.c) / (th.d_sigma * cs.n) * m1 * m1;
                    pass = pass && std::abs(reduced - theo) <= 1e-12;
                    detail += fmt("(l=2) closed form %.9f = (1-c)/n E[N]^2 %.9f; ", theo, reduced);
                }
                detail += fmt("(l=%d,n=%d,c=%.4f) slope %.6f theory %.6f z %+.2f; ", cs.lambda, cs.n, cs.c,
                              est.mean_slope, theo, z);
            }
            return {result("5", "rate with cumulation", pass, detail)};
        }

        std::vector<CheckResult> reduction_identity(const ValidationOptions &)
        {
            double worst = 0.0;
            int points = 0;
            for (int lambda = 1; lambda <= 10; ++lambda)
                for (const int n : {1, 2, 5, 10, 20, 50, 100, 1000, 5000, 10000})
                    for (const double d : {0.5, 1.0})
                    {
                        auto p = make(lambda, n, 1.0, 0);
                        p.d_sigma = d;
                        worst = std::max(worst, std::abs(rates::rate_with_cumulation(p) - rates::rate_no_cumulation(p)));
                        ++points;
                    }
            return {result("6", "c=1 reduction identity", worst <= 1e-12,
                           fmt("%d points, max |difference| = %.2e", points, worst))};
        }

        std::vector<CheckResult> step_variance(const ValidationOptions &o)
        {
            const long samples = o.quick ? 200000 : 1000000;
            bool pass = true;
            std::string detail;
            for (const double c : {1.0, 1.0 / std::sqrt(20.0)})
            {
                const auto p = make(8, 20, c, o.seed + 7);
                auto est = experiments::estimate_step_variance(p, experiments::default_burn_in(c), samples,
                                                               {.workers = o.workers});
                const double theo = rates::log_step_variance(theory_side(p, o)).variance;
                const double rel = est.empirical / theo - 1.0;
                pass = pass && std::abs(rel) <= 0.05;
                detail += fmt("(c=%.4f) empirical %.6f theory %.6f rel %+.2f%%; ", c, est.empirical, theo, 100.0 * rel);
            }
            const auto anchor = rates::log_step_variance(theory_side(make(1, 20, 1.0, 0), o)).variance;
            pass = pass && std::abs(anchor - 0.025) <= 1e-12;
            detail += fmt("(l=1 anchor) %.15f vs 0.025", anchor);
            return {result("7", "log step-size variance", pass, detail)};
        }

        std::vector<CheckResult> path_moments(const ValidationOptions &o)
        {
            const double c = 1.0 / std::sqrt(20.0);
            const auto p = make(8, 20, c, o.seed + 8);
            const long samples = o.quick ? 250000 : 1000000;
            const auto st = experiments::stationary_statistics(p, experiments::default_burn_in(c), samples,
                                                               {.workers = o.workers});
            const double m2 = rates::path_second_moment_limit(8, c);
            const double m4 = rates::path_fourth_moment_limit(8, c).fourth_moment_limit;
            const double r2 = st.p1_m2 / m2 - 1.0;
            const double r4 = st.p1_m4 / m4 - 1.0;
            const bool pass = std::abs(r2) <= 0.02 && std::abs(r4) <= 0.02;
            return {result("8", "stationary path moments", pass,
                           fmt("E[p1^2] %.4f vs %.4f (%+.2f%%), E[p1^4] %.3f vs %.3f (%+.2f%%)", st.p1_m2, m2,
                               100.0 * r2, st.p1_m4, m4, 100.0 * r4))};
        }

        std::vector<CheckResult> x_divergence(const ValidationOptions &o)
        {
            const auto size = sized(o, 1000, 2000);
            const auto p = make(8, 20, 1.0, o.seed + 9);
            const auto batch = experiments::run_batch(p, size.runs, size.steps, true, {.workers = o.workers});
            const auto est = experiments::estimate_x_rate(batch);
            const double theo = rates::rate_no_cumulation(theory_side(p, o));
            const double z = z_against(est, theo);
            return {result("9", "first-coordinate divergence", std::abs(z) <= 3.0,
                           fmt("slope %.6f over [%d, %d] theory %.6f z %+.2f (%d runs)", est.mean_slope, est.burn_in,
                               size.steps, theo, z, est.runs_used))};
        }

        std::vector<int> log_grid(double lo, double hi, int points)
        {
            std::vector<int> grid;
            for (int i = 0; i < points; ++i)
                grid.push_back(static_cast<int>(std::lround(
                    std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1)))));
            return grid;
        }

        std::vector<CheckResult> scaling(const ValidationOptions &o)
        {
            using rates::CPolicy;
            const double d = o.dsigma_perturbation;
            const auto grid = log_grid(1e4, 1e6, 21);
            std::vector<CheckResult> out;

            const auto constant = rates::rel_std_curve(8, d, CPolicy::constant(1.0), grid);
            const double slope_c = experiments::loglog_slope(constant, 1e4, 1e6);
            out.push_back(result("10a", "rel-std slope, constant c=1", std::abs(slope_c - 0.5) <= 0.02,
                                 fmt("log-log slope %.4f (target 0.5 +- 0.02)", slope_c)));

            const int n_crit = 1000000;
            const auto critical = rates::rel_std_curve(8, d, CPolicy::alpha(1.0 / 3.0), std::span(&n_crit, 1));
            const double m1 = min_moment(8, 1);
            const double target = 1.0 / (std::numbers::sqrt2 * m1 * m1);
            const double rel = critical[0].rel_std / target - 1.0;
            out.push_back(result("10b", "rel-std limit, alpha=1/3", std::abs(rel) <= 0.05,
                                 fmt("rel_std(n=1e6) %.4f vs 1/(sqrt2 E[N]^2) = %.4f (%+.1f%%, tol 5%%)",
                                     critical[0].rel_std, target, 100.0 * rel)));

            const auto quarter = rates::rel_std_curve(8, d, CPolicy::alpha(0.25), grid);
            const double slope_q = experiments::loglog_slope(quarter, 1e4, 1e6);
            out.push_back(result("10c", "rel-std slope, alpha=1/4", std::abs(slope_q - 0.125) <= 0.02,
                                 fmt("log-log slope %.4f (target 0.125 +- 0.02)", slope_q)));
            return out;
        }

        std::vector<CheckResult> invariance(const ValidationOptions &o)
        {
            // exp saturates to 0 / inf outside roughly (-745, 709); past that bound it is no longer
            // strictly increasing in floating point, so each run stops before its f-values get there.
            constexpr double kExpSafe = 700.0;
            const int runs = o.quick ? 20 : 100;
            const int max_steps = 1000;
            long compared = 0;
            bool identical = true, translated = true;
            for (const double c : {1.0, 1.0 / std::sqrt(20.0)})
            {
                const auto p = make(8, 20, c, o.seed + 11);
                for (int run = 0; run < runs; ++run)
                {
                    Rng ra(p.seed, run), rb(p.seed, run), rc(p.seed, run);
                    auto a = es::init_state(p, ra);
                    auto b = es::init_state(p, rb);
                    auto t = es::init_state(p, rc);
                    for (auto &xi : t.x)
                        xi += 3.25;
                    const es::Transform g = [](double f) { return std::exp(f - 2.0); };
                    es::SelectedStep sa, sb, st;
                    for (int k = 0; k < max_steps && std::abs(a.x[0]) + 10.0 * a.sigma < kExpSafe; ++k)
                    {
                        es::step(a, p, ra, sa);
                        es::step(b, p, rb, sb, es::SamplingMode::full, &g);
                        es::step(t, p, rc, st);
                        identical = identical && sa.index == sb.index && a.x == b.x && a.path == b.path &&
                                    a.sigma == b.sigma;
                        translated = translated && sa.index == st.index;
                        ++compared;
                    }
                }
            }
            return {result("11", "transformation invariance", identical && translated,
                           fmt("%ld steps over %d runs x 2 settings: exp(x1-2) bitwise %s, translated parent indices %s",
                               compared, runs, identical ? "identical" : "DIFFERENT",
                               translated ? "identical" : "DIFFERENT"))};
        }

        std::vector<CheckResult> determinism(const ValidationOptions &o)
        {
            const auto simulate = [&](const char *workers) {
                std::ostringstream out, err;
                const std::vector<std::string> args = {
                    "simulate", "--runs", o.quick ? "101" : "501", "--steps", o.quick ? "200" : "1000",
                    "--seed", std::to_string(o.seed + 12), "--workers", workers};
                const int code = cli::run(args, out, err);
                return std::pair{code, out.str()};
            };
            const auto first = simulate("1");
            const auto again = simulate("1");
            const auto parallel = simulate("8");
            const bool pass = first.first == 0 && first.second == again.second && first.second == parallel.second &&
                              !first.second.empty();
            return {result("12", "simulate determinism", pass,
                           fmt("%zu bytes; rerun %s, workers 1 vs 8 %s", first.second.size(),
                               first.second == again.second ? "identical" : "DIFFERENT",
                               first.second == parallel.second ? "identical" : "DIFFERENT"))};
        }
    }

    const std::vector<Check> &all_checks()
    {
        static const std::vector<Check> checks = {
            {"1", "order-statistic recurrence", true, recurrence},
            {"2", "second-moment monotonicity", true, monotonicity},
            {"3", "rate without cumulation", true, no_cumulation_rate},
            {"4", "random-walk regime", true, random_walk},
            {"5", "rate with cumulation", true, cumulation_rate},
            {"6", "c=1 reduction identity", true, reduction_identity},
            {"7", "log step-size variance", true, step_variance},
            {"8", "stationary path moments", true, path_moments},
            {"9", "first-coordinate divergence", true, x_divergence},
            {"10", "relative std scaling", false, scaling},
            {"11", "transformation invariance", true, invariance},
            {"12", "simulate determinism", false, determinism},
        };
        return checks;
    }

    std::vector<CheckResult> run_checks(const ValidationOptions &options, bool validate_suite_only,
                                        const std::function<void(const CheckResult &)> &on_result)
    {
        std::vector<CheckResult> results;
        for (const auto &check : all_checks())
        {
            if (validate_suite_only && !check.in_validate_suite)
                continue;
            for (auto &r : check.run(options))
            {
                if (on_result)
                    on_result(r);
                results.push_back(std::move(r));
            }
        }
        return results;
    }

    std::string format(const CheckResult &r)
    {
        return (r.passed ? "[PASS] " : "[FAIL] ") + r.id + " " + r.name + ": " + r.detail;
    }
}

#include "csalab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "csalab/errors.hpp"
#include "csalab/experiments.hpp"
#include "csalab/validation.hpp"

namespace csalab::cli
{
    namespace
    {
        using nlohmann::json;

        struct Flags
        {
            int lambda = 0, n = 0, runs = 0, steps = 0;
            double c = 0.0, dsigma = 0.0, perturb = 1.0;
            std::uint64_t seed = 0;
            unsigned workers = 0;
            std::string levels, n_grid, format, out, config;
            std::vector<std::string> policies;
            bool quick = false;
        };

        std::string quoted(const std::string &s) { return "\"" + s + "\""; }

        std::string json_value(double v)
        {
            return std::isfinite(v) ? format_number(v) : quoted(format_number(v));
        }

        template <typename T>
        std::vector<T> parse_list(const std::string &text)
        {
            std::vector<T> values;
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ','))
            {
                std::size_t used = 0;
                T v{};
                try
                {
                    if constexpr (std::is_same_v<T, int>)
                        v = std::stoi(item, &used);
                    else
                        v = std::stod(item, &used);
                }
                catch (const std::exception &)
                {
                    throw DomainError("bad list element '" + item + "'");
                }
                if (used != item.size())
                    throw DomainError("bad list element '" + item + "'");
                values.push_back(v);
            }
            if (values.empty())
                throw DomainError("empty list");
            return values;
        }

        void write_output(const RunConfig &config, const std::string &payload, std::ostream &out)
        {
            if (config.out.empty() || config.out == "-")
            {
                out << payload;
                return;
            }
            std::ofstream file(config.out, std::ios::binary);
            if (!file)
                throw DomainError("cannot open output file '" + config.out + "'");
            file << payload;
        }

        std::string resolved_format(const RunConfig &config, const char *fallback)
        {
            const std::string f = config.format.empty() ? fallback : config.format;
            if (f != "csv" && f != "json")
                throw DomainError("format must be csv or json");
            return f;
        }

        int cmd_rates(const RunConfig &config, std::ostream &out)
        {
            const auto report = rates::report(config.params);
            write_output(config, resolved_format(config, "json") == "json" ? rates_json(report) : rates_csv(report), out);
            return kOk;
        }

        int cmd_simulate(const RunConfig &config, std::ostream &out)
        {
            experiments::BatchOptions options;
            options.workers = config.workers;
            options.streaming_fallback = true;
            const auto batch = experiments::run_batch(config.params, config.runs, config.steps, false, options);
            const auto levels = config.levels.empty() ? experiments::default_quantile_levels() : config.levels;
            const auto table = experiments::quantiles(batch, levels);

            std::string payload;
            const bool csv = resolved_format(config, "csv") == "csv";
            payload += csv ? "t,level,value\n" : "[\n";
            bool first = true;
            for (int t = 0; t <= table.steps; ++t)
                for (std::size_t l = 0; l < table.levels.size(); ++l)
                {
                    const auto ts = std::to_string(t);
                    const auto lv = format_number(table.levels[l]);
                    const auto v = format_number(table.at(l, t));
                    if (csv)
                        payload += ts + "," + lv + "," + v + "\n";
                    else
                    {
                        payload += (first ? "" : ",\n") + std::string("{\"t\":") + ts + ",\"level\":" + lv +
                                   ",\"value\":" + v + "}";
                        first = false;
                    }
                }
            if (!csv)
                payload += "\n]\n";
            write_output(config, payload, out);
            return kOk;
        }

        int cmd_sweep(const RunConfig &config, std::ostream &out)
        {
            std::vector<rates::CPolicy> policies;
            for (const auto &p : config.policies)
                policies.push_back(rates::CPolicy::parse(p));
            if (policies.empty())
                policies = experiments::default_sweep_policies();
            const auto grid = config.n_grid.empty() ? experiments::default_n_grid() : config.n_grid;
            for (const int n : grid)
                if (n < 1)
                    throw DomainError("n-grid entries must be >= 1");
            const auto rows = experiments::figure2_sweep(config.params.lambda, config.params.d_sigma, policies, grid);

            const bool csv = resolved_format(config, "csv") == "csv";
            std::string payload = csv ? "policy,n,rel_std\n" : "[\n";
            for (std::size_t i = 0; i < rows.size(); ++i)
            {
                const auto &r = rows[i];
                if (csv)
                    payload += r.policy + "," + std::to_string(r.n) + "," + format_number(r.rel_std) + "\n";
                else
                    payload += (i ? ",\n" : "") + std::string("{\"policy\":") + quoted(r.policy) +
                               ",\"n\":" + std::to_string(r.n) + ",\"rel_std\":" + json_value(r.rel_std) + "}";
            }
            if (!csv)
                payload += "\n]\n";
            write_output(config, payload, out);
            return kOk;
        }

        int cmd_validate(const RunConfig &config, std::ostream &out)
        {
            validation::ValidationOptions options;
            options.quick = config.quick;
            options.workers = config.workers;
            options.seed = config.params.seed;
            options.dsigma_perturbation = config.perturb_dsigma;
            bool all = true;
            validation::run_checks(options, true, [&](const validation::CheckResult &r) {
                all = all && r.passed;
                out << validation::format(r) << "\n" << std::flush;
            });
            out << (all ? "all checks passed\n" : "validation FAILED\n");
            return all ? kOk : kValidationFailure;
        }

        void add_common(CLI::App &cmd, Flags &f)
        {
            cmd.add_option("--config", f.config, "JSON config file (flags override it)");
            cmd.add_option("--lambda", f.lambda, "offspring count");
            cmd.add_option("--n", f.n, "dimension");
            cmd.add_option("--c", f.c, "cumulation parameter in (0, 1]");
            cmd.add_option("--dsigma", f.dsigma, "damping");
            cmd.add_option("--seed", f.seed, "base seed (falls back to CSA_LAB_SEED)");
            cmd.add_option("--format", f.format, "csv | json");
            cmd.add_option("--out", f.out, "output path, '-' for stdout");
            cmd.add_option("--workers", f.workers, "worker threads, 0 = all cores");
        }

        RunConfig resolve(CLI::App &cmd, const Flags &f)
        {
            RunConfig config;
            config.params.seed = 0;
            if (const char *env = std::getenv("CSA_LAB_SEED"); env && *env)
            {
                try
                {
                    std::size_t used = 0;
                    config.params.seed = std::stoull(env, &used);
                    if (used != std::string(env).size())
                        throw std::invalid_argument(env);
                }
                catch (const std::exception &)
                {
                    throw DomainError("CSA_LAB_SEED is not an unsigned integer");
                }
            }
            if (!f.config.empty())
            {
                std::ifstream file(f.config);
                if (!file)
                    throw DomainError("cannot read config file '" + f.config + "'");
                std::stringstream ss;
                ss << file.rdbuf();
                apply_config_json(ss.str(), config);
            }
            const auto given = [&](const char *name) {
                const auto *opt = cmd.get_option_no_throw(name);
                return opt && opt->count() > 0;
            };
            if (given("--lambda")) config.params.lambda = f.lambda;
            if (given("--n")) config.params.n = f.n;
            if (given("--c")) config.params.c = f.c;
            if (given("--dsigma")) config.params.d_sigma = f.dsigma;
            if (given("--seed")) config.params.seed = f.seed;
            if (given("--runs")) config.runs = f.runs;
            if (given("--steps")) config.steps = f.steps;
            if (given("--levels")) config.levels = parse_list<double>(f.levels);
            if (given("--policy")) config.policies = f.policies;
            if (given("--n-grid")) config.n_grid = parse_list<int>(f.n_grid);
            if (given("--format")) config.format = f.format;
            if (given("--out")) config.out = f.out;
            if (given("--workers")) config.workers = f.workers;
            if (given("--quick")) config.quick = f.quick;
            if (given("--perturb-dsigma")) config.perturb_dsigma = f.perturb;

            config.params.validate();
            if (config.runs < 1 || config.steps < 1)
                throw DomainError("runs and steps must be >= 1");
            for (const double p : config.levels)
                if (!(p > 0.0 && p < 1.0))
                    throw DomainError("quantile levels must lie in (0, 1)");
            if (!config.format.empty() && config.format != "csv" && config.format != "json")
                throw DomainError("format must be csv or json");
            return config;
        }
    }

    std::string format_number(double v)
    {
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        if (std::isnan(v))
            return "nan";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string rates_json(const rates::RateReport &r)
    {
        const auto &v = r.variance;
        const std::vector<std::pair<std::string, std::string>> fields = {
            {"lambda", std::to_string(r.params.lambda)},
            {"n", std::to_string(r.params.n)},
            {"c", json_value(r.params.c)},
            {"d_sigma", json_value(r.params.d_sigma)},
            {"rate_no_cumulation", json_value(r.rate_no_cumulation)},
            {"rate_with_cumulation", json_value(r.rate_with_cumulation)},
            {"a", json_value(v.a)},
            {"k4", json_value(v.k4)},
            {"k31", json_value(v.k31)},
            {"k22", json_value(v.k22)},
            {"k211", json_value(v.k211)},
            {"k1111", json_value(v.k1111)},
            {"fourth_moment_limit", json_value(v.fourth_moment_limit)},
            {"second_moment_limit", json_value(v.second_moment_limit)},
            {"variance", json_value(v.variance)},
            {"rel_std", json_value(v.rel_std)},
            {"rate_is_zero", v.rate_is_zero ? "true" : "false"},
            {"outside_regime", r.outside_regime ? "true" : "false"},
        };
        std::string s = "{\n";
        for (std::size_t i = 0; i < fields.size(); ++i)
            s += "  " + quoted(fields[i].first) + ": " + fields[i].second + (i + 1 < fields.size() ? ",\n" : "\n");
        return s + "}\n";
    }

    std::string rates_csv(const rates::RateReport &r)
    {
        const auto &v = r.variance;
        std::string s = "key,value\n";
        const auto row = [&](const char *k, const std::string &val) { s += std::string(k) + "," + val + "\n"; };
        row("lambda", std::to_string(r.params.lambda));
        row("n", std::to_string(r.params.n));
        row("c", format_number(r.params.c));
        row("d_sigma", format_number(r.params.d_sigma));
        row("rate_no_cumulation", format_number(r.rate_no_cumulation));
        row("rate_with_cumulation", format_number(r.rate_with_cumulation));
        row("a", format_number(v.a));
        row("k4", format_number(v.k4));
        row("k31", format_number(v.k31));
        row("k22", format_number(v.k22));
        row("k211", format_number(v.k211));
        row("k1111", format_number(v.k1111));
        row("fourth_moment_limit", format_number(v.fourth_moment_limit));
        row("second_moment_limit", format_number(v.second_moment_limit));
        row("variance", format_number(v.variance));
        row("rel_std", format_number(v.rel_std));
        row("rate_is_zero", v.rate_is_zero ? "true" : "false");
        row("outside_regime", r.outside_regime ? "true" : "false");
        return s;
    }

    void apply_config_json(const std::string &json_text, RunConfig &config)
    {
        json doc;
        try
        {
            doc = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw DomainError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object())
            throw DomainError("config must be a JSON object");
        try
        {
            for (const auto &[key, value] : doc.items())
            {
                if (key == "lambda") config.params.lambda = value.get<int>();
                else if (key == "n") config.params.n = value.get<int>();
                else if (key == "c") config.params.c = value.get<double>();
                else if (key == "dsigma") config.params.d_sigma = value.get<double>();
                else if (key == "seed") config.params.seed = value.get<std::uint64_t>();
                else if (key == "runs") config.runs = value.get<int>();
                else if (key == "steps") config.steps = value.get<int>();
                else if (key == "levels") config.levels = value.get<std::vector<double>>();
                else if (key == "policy")
                    config.policies = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                                        : value.get<std::vector<std::string>>();
                else if (key == "n_grid") config.n_grid = value.get<std::vector<int>>();
                else if (key == "format") config.format = value.get<std::string>();
                else if (key == "out") config.out = value.get<std::string>();
                else if (key == "workers") config.workers = value.get<unsigned>();
                else if (key == "quick") config.quick = value.get<bool>();
                else
                    throw DomainError("unknown config key '" + key + "'");
            }
        }
        catch (const json::exception &e)
        {
            throw DomainError(std::string("config value has the wrong type: ") + e.what());
        }
    }

    int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Simulation and closed-form rates of the (1,lambda)-CSA-ES on linear functions", "csa_lab"};
        app.require_subcommand(1);
        Flags f;

        auto *rates_cmd = app.add_subcommand("rates", "closed-form rates and variance breakdown");
        add_common(*rates_cmd, f);

        auto *sim_cmd = app.add_subcommand("simulate", "quantile trajectories of ln(sigma_t/sigma_0)");
        add_common(*sim_cmd, f);
        sim_cmd->add_option("--runs", f.runs, "independent runs");
        sim_cmd->add_option("--steps", f.steps, "iterations per run");
        sim_cmd->add_option("--levels", f.levels, "comma-separated quantile levels");

        auto *val_cmd = app.add_subcommand("validate", "statistical validation suite");
        add_common(*val_cmd, f);
        val_cmd->add_flag("--quick", f.quick, "smaller batches");
        val_cmd->add_option("--perturb-dsigma", f.perturb, "scale d_sigma in closed forms only (test hook)")
            ->group("");

        auto *sweep_cmd = app.add_subcommand("sweep", "relative standard deviation over n for c-policies");
        add_common(*sweep_cmd, f);
        sweep_cmd->add_option("--policy", f.policies, "constant:<c> | alpha:<exponent>, repeatable");
        sweep_cmd->add_option("--n-grid", f.n_grid, "comma-separated dimensions");

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try
        {
            app.parse(reversed);
        }
        catch (const CLI::CallForHelp &)
        {
            out << app.help();
            return kOk;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << "\n";
            return kUsageError;
        }

        try
        {
            if (rates_cmd->parsed())
                return cmd_rates(resolve(*rates_cmd, f), out);
            if (sim_cmd->parsed())
                return cmd_simulate(resolve(*sim_cmd, f), out);
            if (sweep_cmd->parsed())
                return cmd_sweep(resolve(*sweep_cmd, f), out);
            if (val_cmd->parsed())
            {
                auto config = resolve(*val_cmd, f);
                if (!val_cmd->get_option("--seed")->count() && !std::getenv("CSA_LAB_SEED") && f.config.empty())
                    config.params.seed = validation::ValidationOptions{}.seed;
                return cmd_validate(config, out);
            }
        }
        catch (const DomainError &e)
        {
            err << "error: " << e.what() << "\n";
            return kUsageError;
        }
        catch (const ResourceError &e)
        {
            err << "error: " << e.what() << "\n";
            return kUsageError;
        }
        return kUsageError;
    }
}

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "csalab/params.hpp"
#include "csalab/rates.hpp"

namespace csalab::cli
{
    enum ExitCode
    {
        kOk = 0,
        kValidationFailure = 1,
        kUsageError = 2
    };

    /// Fully resolved parameters of one command. Defaults:
    /// n = 20, lambda = 8, c = 1/sqrt(20), d_sigma = 1, 5001 runs.
    struct RunConfig
    {
        AlgorithmParams params;
        int runs = 5001;
        int steps = 5000;
        std::vector<double> levels;
        std::vector<std::string> policies;
        std::vector<int> n_grid;
        /// csv | json; empty means the command's default (json for rates, csv otherwise).
        std::string format;
        /// Empty or "-" writes to the output stream.
        std::string out;
        unsigned workers = 0;
        bool quick = false;
        double perturb_dsigma = 1.0;
    };

    /// 17 significant digits; infinities render as "inf" / "-inf".
    std::string format_number(double v);

    std::string rates_json(const rates::RateReport &report);
    std::string rates_csv(const rates::RateReport &report);

    /// Overlays keys of a JSON config object onto `config`. Throws DomainError on unknown keys
    /// or mistyped values.
    void apply_config_json(const std::string &json_text, RunConfig &config);

    /// Entry point: args exclude the program name. Returns an ExitCode.
    int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
}

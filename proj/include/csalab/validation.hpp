#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace csalab::validation
{
    struct ValidationOptions
    {
        /// Smaller batches; every check keeps its tolerance.
        bool quick = false;
        unsigned workers = 0;
        std::uint64_t seed = 20121;
        /// Multiplies d_sigma in the closed-form side only. Anything but 1 should fail the suite.
        double dsigma_perturbation = 1.0;
    };

    struct CheckResult
    {
        std::string id;
        std::string name;
        bool passed = false;
        std::string detail;
    };

    struct Check
    {
        std::string id;
        std::string name;
        /// Part of `csa_lab validate`; the rest run only in the acceptance binary.
        bool in_validate_suite = true;
        std::function<std::vector<CheckResult>(const ValidationOptions &)> run;
    };

    const std::vector<Check> &all_checks();

    /// Runs checks in id order; on_result sees each result as soon as it is available.
    std::vector<CheckResult> run_checks(const ValidationOptions &options, bool validate_suite_only,
                                        const std::function<void(const CheckResult &)> &on_result = {});

    /// "[PASS] 3 name: detail"
    std::string format(const CheckResult &result);
}

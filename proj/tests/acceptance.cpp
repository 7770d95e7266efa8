// Acceptance suite: one PASS/FAIL line per criterion, full sample sizes.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "csalab/validation.hpp"

int main(int argc, char **argv)
{
    CLI::App app{"csa_lab acceptance suite"};
    csalab::validation::ValidationOptions options;
    app.add_flag("--quick", options.quick, "smaller batches, same tolerances");
    app.add_option("--seed", options.seed, "base seed");
    app.add_option("--workers", options.workers, "worker threads, 0 = all cores");
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    for (const auto &check : csalab::validation::all_checks())
    {
        const auto start = std::chrono::steady_clock::now();
        const auto results = check.run(options);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        bool passed = !results.empty();
        std::string detail;
        for (const auto &r : results)
        {
            passed = passed && r.passed;
            if (!detail.empty())
                detail += "; ";
            detail += results.size() > 1 ? r.id + (r.passed ? " ok " : " FAILED ") + r.detail : r.detail;
        }
        failed += passed ? 0 : 1;
        std::printf("[%s] criterion %s (%s): %s [%.1fs]\n", passed ? "PASS" : "FAIL", check.id.c_str(),
                    check.name.c_str(), detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, csalab::validation::all_checks().size());
    return failed == 0 ? 0 : 1;
}

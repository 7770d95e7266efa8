#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "csalab/params.hpp"
#include "csalab/rng.hpp"

namespace csalab::es
{
    /// Markov state (X_t, sigma_t, p_t) of a (1,lambda)-CSA-ES on f(x) = x_1.
    struct EsState
    {
        std::vector<double> x;
        std::vector<double> path;
        double sigma = 1.0;
        /// Running sum of the per-step log increments, i.e. ln(sigma_t / sigma_0).
        double log_sigma = 0.0;
        std::uint64_t t = 0;
    };

    /// Winning standard step xi*_t and the step-size factor eta*_t it produced.
    struct SelectedStep
    {
        std::vector<double> xi;
        double eta = 1.0;
        /// Offspring index that won selection; -1 in marginal sampling mode.
        int index = -1;
    };

    enum class SamplingMode
    {
        /// Simulate all lambda offspring and select the best.
        full,
        /// Draw the selected step directly: first coordinate ~ N_{1:lambda}, the rest ~ N(0,1).
        marginal
    };

    /// Strictly increasing map applied to the f-value before selection.
    using Transform = std::function<double(double)>;

    /// x = (1, 0, ..., 0), sigma = 1, path ~ N(0, I_n), t = 0.
    EsState init_state(const AlgorithmParams &params, Rng &rng);

    /// One iteration: sample, select (ties go to the lowest index), update path, sigma and x.
    /// `out` is reused as scratch to avoid reallocating per step.
    void step(EsState &state, const AlgorithmParams &params, Rng &rng, SelectedStep &out,
              SamplingMode mode = SamplingMode::full, const Transform *transform = nullptr);

    SelectedStep step(EsState &state, const AlgorithmParams &params, Rng &rng,
                      SamplingMode mode = SamplingMode::full, const Transform *transform = nullptr);

    /// Empirical moments of the selected step on random offspring against
    /// E[N_{1:lambda}^k] (first coordinate) and N(0,1) (second coordinate).
    struct SelectionCheck
    {
        long samples = 0;
        double first_mean = 0.0, first_mean_se = 0.0, first_mean_expected = 0.0;
        double first_m2 = 0.0, first_m2_se = 0.0, first_m2_expected = 0.0;
        double other_mean = 0.0, other_mean_se = 0.0;
        double other_m2 = 0.0, other_m2_se = 0.0;

        /// Largest |empirical - expected| / se over the four statistics.
        double max_abs_z() const;
    };

    SelectionCheck selected_first_coordinate_distribution_check(int lambda, long samples, Rng &rng);

    /// Z_t = (x_{t+1,1} - x_{0,1}) / sigma_t for c = 1. The recursion
    /// Z_{t+1} = Z_t / eta*_t + xi*_{t+1,1} divides by the factor of the
    /// previous selected step, which is carried here.
    struct ZChainState
    {
        double z = 0.0;
        double pending_eta = 1.0;
    };

    /// One Z-chain transition; draws exactly what a marginal-mode ES step with c = 1 draws.
    ZChainState z_step(const ZChainState &state, int lambda, int n, double d_sigma, Rng &rng);
}

#include "csalab/es_core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "csalab/errors.hpp"
#include "csalab/order_stats.hpp"

namespace csalab::es
{
    namespace
    {
        thread_local std::vector<double> candidate_scratch;

        double squared_norm(const std::vector<double> &v)
        {
            double s = 0.0;
            for (const double e : v)
                s += e * e;
            return s;
        }
    }

    EsState init_state(const AlgorithmParams &params, Rng &rng)
    {
        params.validate();
        const auto n = static_cast<std::size_t>(params.n);
        EsState s;
        s.x.assign(n, 0.0);
        s.x[0] = 1.0;
        s.path.resize(n);
        for (auto &p : s.path)
            p = rng.normal();
        return s;
    }

    void step(EsState &state, const AlgorithmParams &params, Rng &rng, SelectedStep &out,
              SamplingMode mode, const Transform *transform)
    {
        const auto n = state.x.size();
        out.xi.resize(n);

        if (mode == SamplingMode::marginal)
        {
            out.xi[0] = order_stats::sample_min(params.lambda, rng);
            for (std::size_t j = 1; j < n; ++j)
                out.xi[j] = rng.normal();
            out.index = -1;
        }
        else
        {
            auto &candidate = candidate_scratch;
            candidate.resize(n);
            const double x1 = state.x[0];
            double best_value = 0.0;
            for (int i = 0; i < params.lambda; ++i)
            {
                for (auto &e : candidate)
                    e = rng.normal();
                double value = x1 + state.sigma * candidate[0];
                if (transform)
                    value = (*transform)(value);
                if (i == 0 || value < best_value)
                {
                    best_value = value;
                    out.index = i;
                    std::swap(out.xi, candidate);
                }
            }
        }

        const double decay = 1.0 - params.c;
        const double gain = std::sqrt(params.c * (2.0 - params.c));
        for (std::size_t j = 0; j < n; ++j)
        {
            state.x[j] += state.sigma * out.xi[j];
            state.path[j] = decay * state.path[j] + gain * out.xi[j];
        }
        const double increment =
            params.c / (2.0 * params.d_sigma) * (squared_norm(state.path) / static_cast<double>(n) - 1.0);
        out.eta = std::exp(increment);
        state.sigma *= out.eta;
        state.log_sigma += increment;
        ++state.t;
    }

    SelectedStep step(EsState &state, const AlgorithmParams &params, Rng &rng, SamplingMode mode,
                      const Transform *transform)
    {
        SelectedStep out;
        step(state, params, rng, out, mode, transform);
        return out;
    }

    double SelectionCheck::max_abs_z() const
    {
        const double z[] = {(first_mean - first_mean_expected) / first_mean_se,
                            (first_m2 - first_m2_expected) / first_m2_se,
                            other_mean / other_mean_se,
                            (other_m2 - 1.0) / other_m2_se};
        double worst = 0.0;
        for (const double v : z)
            worst = std::max(worst, std::abs(v));
        return worst;
    }

    SelectionCheck selected_first_coordinate_distribution_check(int lambda, long samples, Rng &rng)
    {
        if (samples < 2)
            throw DomainError("selection check needs at least two samples");
        AlgorithmParams params;
        params.lambda = lambda;
        params.n = 2;
        params.c = 1.0;
        params.validate();

        // Sums of x, x^2, x^4 for both coordinates; SEs come from the sample moments.
        long double s1[3] = {}, s2[3] = {};
        SelectedStep sel;
        for (long k = 0; k < samples; ++k)
        {
            EsState probe;
            probe.x = {0.0, 0.0};
            probe.path = {0.0, 0.0};
            step(probe, params, rng, sel, SamplingMode::full);
            const double a = sel.xi[0], b = sel.xi[1];
            s1[0] += a, s1[1] += a * a, s1[2] += a * a * a * a;
            s2[0] += b, s2[1] += b * b, s2[2] += b * b * b * b;
        }
        const double N = static_cast<double>(samples);
        const auto summarize = [N](const long double *s, double &mean, double &mean_se, double &m2, double &m2_se) {
            mean = static_cast<double>(s[0] / N);
            m2 = static_cast<double>(s[1] / N);
            const double m4 = static_cast<double>(s[2] / N);
            mean_se = std::sqrt(std::max(m2 - mean * mean, 0.0) / N);
            m2_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / N);
        };

        SelectionCheck r;
        r.samples = samples;
        summarize(s1, r.first_mean, r.first_mean_se, r.first_m2, r.first_m2_se);
        summarize(s2, r.other_mean, r.other_mean_se, r.other_m2, r.other_m2_se);
        r.first_mean_expected = order_stats::min_moment(lambda, 1);
        r.first_m2_expected = order_stats::min_moment(lambda, 2);
        return r;
    }

    ZChainState z_step(const ZChainState &state, int lambda, int n, double d_sigma, Rng &rng)
    {
        if (lambda < 1 || n < 1 || !(d_sigma > 0.0))
            throw DomainError("z_step requires lambda >= 1, n >= 1, d_sigma > 0");
        const double first = order_stats::sample_min(lambda, rng);
        double norm2 = first * first;
        for (int j = 1; j < n; ++j)
        {
            const double e = rng.normal();
            norm2 += e * e;
        }
        ZChainState next;
        next.z = state.z / state.pending_eta + first;
        next.pending_eta = std::exp(1.0 / (2.0 * d_sigma) * (norm2 / n - 1.0));
        return next;
    }
}

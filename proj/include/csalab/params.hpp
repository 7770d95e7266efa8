#pragma once

#include <cmath>
#include <cstdint>

namespace csalab
{
    /// Full configuration of one (1,lambda)-CSA-ES instance.
    struct AlgorithmParams
    {
        int lambda = 8;
        int n = 20;
        double c = 1.0 / std::sqrt(20.0);
        double d_sigma = 1.0;
        std::uint64_t seed = 0;

        /// Throws DomainError unless lambda >= 1, n >= 1, 0 < c <= 1, d_sigma > 0.
        void validate() const;
    };
}

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace csalab
{
    /// Philox4x32-10 counter-based block generator (Salmon et al., SC'11).
    /// Stateless: the output is a pure function of (counter, key).
    struct Philox4x32
    {
        using Counter = std::array<std::uint32_t, 4>;
        using Key = std::array<std::uint32_t, 2>;

        static Counter block(Counter ctr, Key key);
    };

    /// Identifies an independent random substream: (base seed, run index).
    struct StreamId
    {
        std::uint64_t seed = 0;
        std::uint64_t run = 0;
    };

    /// Sequential view of one Philox substream. Satisfies
    /// UniformRandomBitGenerator so it also plugs into <random>.
    class Rng
    {
    public:
        using result_type = std::uint32_t;

        explicit Rng(StreamId id);
        Rng(std::uint64_t seed, std::uint64_t run) : Rng(StreamId{seed, run}) {}

        static constexpr result_type min() { return 0; }
        static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

        result_type operator()();

        /// Uniform on (0, 1], 53 bits.
        double uniform();

        /// Standard normal via Box-Muller; the second variate of each pair is cached.
        double normal();

        StreamId id() const { return id_; }

    private:
        void refill();

        StreamId id_;
        std::uint64_t block_index_ = 0;
        Philox4x32::Counter buffer_{};
        int next_word_ = 4;
        double spare_normal_ = 0.0;
        bool has_spare_ = false;
    };

    /// Seed mixer (splitmix64 finalizer), used to hash run indices.
    std::uint64_t mix64(std::uint64_t x);
}

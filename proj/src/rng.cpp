#include "csalab/rng.hpp"

#include <cmath>
#include <numbers>

namespace csalab
{
    namespace
    {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

        inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi, std::uint32_t &lo)
        {
            const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
            hi = static_cast<std::uint32_t>(product >> 32);
            lo = static_cast<std::uint32_t>(product);
        }
    }

    Philox4x32::Counter Philox4x32::block(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round)
        {
            if (round > 0)
            {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(kMul0, ctr[0], hi0, lo0);
            mulhilo(kMul1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    Rng::Rng(StreamId id) : id_(id) {}

    void Rng::refill()
    {
        const Philox4x32::Counter ctr = {
            static_cast<std::uint32_t>(block_index_),
            static_cast<std::uint32_t>(block_index_ >> 32),
            static_cast<std::uint32_t>(id_.run),
            static_cast<std::uint32_t>(id_.run >> 32)};
        const Philox4x32::Key key = {
            static_cast<std::uint32_t>(id_.seed),
            static_cast<std::uint32_t>(id_.seed >> 32)};
        buffer_ = Philox4x32::block(ctr, key);
        ++block_index_;
        next_word_ = 0;
    }

    Rng::result_type Rng::operator()()
    {
        if (next_word_ == 4)
            refill();
        return buffer_[next_word_++];
    }

    double Rng::uniform()
    {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return static_cast<double>(bits + 1) * 0x1.0p-53;
    }

    double Rng::normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_normal_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_normal_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }
}

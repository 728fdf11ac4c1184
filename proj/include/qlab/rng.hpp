#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qlab {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for (seed, stream, index). Every sample of every
/// stochastic kernel draws from its own stream, so results do not depend on
/// how samples are scheduled across threads.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
        : engine_(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index))
    {
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits; independent of the standard
    /// library's distribution implementations.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0;
        do
            u1 = uniform();
        while (u1 <= 0.0);
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

} // namespace qlab

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "qpgamma/units.hpp"

namespace qpgamma {

/// 64-bit avalanche finalizer (SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive a child key from a parent key and a counter. Pure function, so any
/// (parent, index) pair always names the same stream.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept
{
    return mix64(parent ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

//---------------------------------------------------------------------------//
/*!
 * Counter-based uniform stream.
 *
 * State is a single 64-bit counter advanced by the golden-ratio increment and
 * passed through mix64 (SplitMix64). Streams are cheap to create, so every
 * decay event and every charge carrier owns one, which makes results
 * independent of worker count and scheduling order.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RandomStream {
  public:
    using result_type = std::uint64_t;

    constexpr explicit RandomStream(std::uint64_t key) noexcept : state_{key} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    //! Uniform in [0, 1)
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    //! Uniform in (0, 1]
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    //! Unit-mean exponential draw
    double exponential() noexcept { return -std::log(uniform_open0()); }

    //! Standard normal via Box-Muller (no cached second value, so draws
    //! consumed per call are fixed at two).
    double normal() noexcept
    {
        const double u1 = uniform_open0();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * units::pi * u2);
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

  private:
    std::uint64_t state_;
};

/// Independent key spaces under one master seed.
enum class StreamDomain : std::uint64_t {
    Decay = 1,
    Carrier = 2,
    Synthesis = 3,
    Burst = 4,
    Calibration = 5,
};

constexpr std::uint64_t domain_key(std::uint64_t master_seed, StreamDomain d) noexcept
{
    return derive_key(master_seed, static_cast<std::uint64_t>(d));
}

/// Stream for the event (or any other counter) `index` under `master_seed`.
inline RandomStream rng_substream(std::uint64_t master_seed, std::uint64_t index) noexcept
{
    return RandomStream{derive_key(master_seed, index)};
}

}  // namespace qpgamma

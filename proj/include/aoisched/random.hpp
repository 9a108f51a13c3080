#pragma once

#include <cstdint>
#include <random>

namespace aoisched {

/// Purposes used to derive independent substreams from one master seed.
enum class StreamPurpose : std::uint64_t {
    traffic = 1,
    uplink = 2,
    forwarding = 3,
    reliability = 4,
    scheduler = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based key: the same (seed, purpose, stream, index) always maps to
/// the same 64-bit value, independent of call order.
constexpr std::uint64_t derive_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t stream,
                                   std::uint64_t index = 0) noexcept
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ stream);
    return splitmix64(h ^ index);
}

constexpr double to_unit_interval(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform draw in [0, 1) keyed by position rather than by sequence.
constexpr double keyed_uniform(std::uint64_t seed, StreamPurpose purpose, std::uint64_t stream,
                               std::uint64_t index) noexcept
{
    return to_unit_interval(derive_key(seed, purpose, stream, index));
}

/// Sequential stream-private generator.
class RandomStream {
public:
    RandomStream() : engine_(0) {}
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t stream)
        : engine_(derive_key(seed, purpose, stream))
    {}

    double uniform() { return to_unit_interval(engine_()); }
    bool bernoulli(double p) { return uniform() < p; }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace aoisched

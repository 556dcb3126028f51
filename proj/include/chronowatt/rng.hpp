#pragma once

#include <cstdint>
#include <random>

namespace chronowatt {

/// SplitMix64 step. Used to derive independent, well-mixed seeds for
/// substreams from one run seed.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream: std::mt19937_64 seeded from
/// splitmix64(seed ^ splitmix64(stream_id)). A source's stream depends only on
/// (run seed, its stream id), so adding sources never perturbs other sources.
/// Real-valued draws are built from raw 64-bit outputs so results are
/// bit-identical across standard library implementations.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream_id)
        : engine_(splitmix64(seed ^ splitmix64(stream_id)))
    {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on (0, 1].
    double uniform_open0()
    {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace chronowatt

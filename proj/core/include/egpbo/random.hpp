#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace egpbo {

using Rng = std::mt19937_64;

/// Independent random streams split off one root seed. Every consumer of
/// randomness in an optimization run draws from exactly one of these, so a
/// run is reproducible regardless of how work is scheduled.
enum class Stream : std::uint32_t {
  InitPoints,
  RandomFeatures,
  HyperFit,
  ModelSampling,
  ThetaSampling,
  Restarts,
  Durations,
  Noise,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Mixes a root seed with a purpose tag and an index into a child seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                          std::uint64_t index = 0) noexcept;

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) noexcept;

Rng make_stream(std::uint64_t root, Stream stream, std::uint64_t index = 0);

/// Uniform double in [0, 1) built from the top 53 bits; unlike
/// std::uniform_real_distribution this is identical across standard libraries.
double uniform01(Rng& rng) noexcept;

/// Standard normal draw. Wraps std::normal_distribution so all modules use
/// one sampling path.
double standard_normal(Rng& rng);

}  // namespace egpbo

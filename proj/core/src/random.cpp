#include "egpbo/random.hpp"

namespace egpbo {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                          std::uint64_t index) noexcept {
  // FNV-1a over the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(root ^ h) + splitmix64(index));
}

namespace {

std::string_view stream_tag(Stream s) noexcept {
  switch (s) {
    case Stream::InitPoints: return "init-points";
    case Stream::RandomFeatures: return "random-features";
    case Stream::HyperFit: return "hyper-fit";
    case Stream::ModelSampling: return "model-sampling";
    case Stream::ThetaSampling: return "theta-sampling";
    case Stream::Restarts: return "restarts";
    case Stream::Durations: return "durations";
    case Stream::Noise: return "noise";
  }
  return "unknown";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index) noexcept {
  return derive_seed(root, stream_tag(stream), index);
}

Rng make_stream(std::uint64_t root, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(root, stream, index));
}

double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

}  // namespace egpbo

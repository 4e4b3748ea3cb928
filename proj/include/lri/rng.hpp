#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lri {

// All randomness derives from one master seed. Each consumer asks for its own
// named stream, so adding a consumer never shifts the draws of another.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(master ^ fnv1a64(purpose)) + splitmix64(index + 1));
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0) {
  return Rng{derive_seed(master, purpose, index)};
}

/// Beta(a, b) via the gamma-ratio construction.
template <class Gen>
double sample_beta(double a, double b, Gen& gen) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(gen);
  const double y = gb(gen);
  return x / (x + y);
}

}  // namespace lri

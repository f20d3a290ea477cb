#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace imed::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a key word into a stream key.
constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t k) {
  return mix64((h ^ (k + kGolden)) + kGolden);
}

/// FNV-1a hash, used to key streams by variable name so that draw streams
/// follow mediator identity rather than position.
constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Domain tags keep independent uses of the same seed on disjoint streams.
namespace domain {
inline constexpr std::uint64_t resample = 0x01;
inline constexpr std::uint64_t bootstrap = 0x02;
inline constexpr std::uint64_t mc_draw = 0x03;
inline constexpr std::uint64_t iw_marginal = 0x04;
inline constexpr std::uint64_t dgp = 0x05;
inline constexpr std::uint64_t truth = 0x06;
inline constexpr std::uint64_t replicate = 0x07;
inline constexpr std::uint64_t permutation = 0x08;
}  // namespace domain

/// Counter-based random stream (SplitMix64). Construction from a key tuple is
/// cheap and stateless across threads: the n-th variate of a given stream is
/// the same no matter where or when it is drawn.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform on the open interval (0,1); safe to pass to log().
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes exactly two raw words.
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586477 * u2);
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  /// Uniform index in [0, n) via 128-bit multiply (Lemire reduction).
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline Stream stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed + kGolden);
  for (std::uint64_t k : keys) h = combine(h, k);
  return Stream(h);
}

}  // namespace imed::rng

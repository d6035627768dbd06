#pragma once

#include <cstdint>

namespace cascadelab {

// Keyed, counter-based randomness for tree nodes.
//
// Every node of the tree owns a 64-bit key. The root key is a hash of
// (seed, replica); the key of child j is the j-th output of a SplitMix64
// stream whose state is the parent key. A node's uniform variate is a
// further hash of its key. Node randomness therefore depends only on
// (seed, replica, path), never on traversal order.

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

/// SplitMix64 output function (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t root_key(std::uint64_t seed, std::uint64_t replica) noexcept {
  return mix64(mix64(seed + kGoldenGamma) ^ (replica * 0xd1b54a32d192ed03ull + 0x8bb84b93962eacc9ull));
}

constexpr std::uint64_t child_key(std::uint64_t parent, unsigned digit) noexcept {
  return mix64(parent + (static_cast<std::uint64_t>(digit) + 1) * kGoldenGamma);
}

/// Maps 64 random bits to the open interval (0, 1) with 52-bit resolution.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

constexpr double key_uniform(std::uint64_t key) noexcept {
  return to_unit(mix64(key ^ 0x5851f42d4c957f2dull));
}

/// Independent sub-seed number `index` of stream `stream` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  return mix64(root_key(seed, stream) + (index + 1) * kGoldenGamma);
}

/// Sequential uniforms from a counter-based stream; used for path sampling.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(mix64(key ^ 0xa0761d6478bd642full)) {}

  constexpr double next_uniform() noexcept { return to_unit(mix64(key_ + ++counter_ * kGoldenGamma)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF for u in (0, 1) (Wichura, AS 241,
/// relative accuracy about 1e-16).
double normal_quantile(double u) noexcept;

}  // namespace cascadelab

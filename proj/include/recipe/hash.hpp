#pragma once

#include <cstddef>
#include <cstdint>

namespace recipe {

// 64-bit finalizer (SplitMix64 / Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Keyed hash shared by every switch and host. Same seed, same outputs,
/// on every platform.
struct GlobalHash {
  std::uint64_t seed = 0;

  // h(i, pkt): the per-hop action coin.
  constexpr double uniform(std::uint64_t hop, std::uint64_t packet_id) const {
    return to_unit(mix64(seed ^ packet_id ^ (hop * 0x9E3779B97F4A7C15ULL)));
  }

  // Key of the independent g(pkt) used for AVST row selection.
  constexpr GlobalHash row_hash() const { return {seed ^ kRowDomain}; }
  // Key of the PINT per-packet branch coin.
  constexpr GlobalHash branch_hash() const { return {seed ^ kBranchDomain}; }

  static constexpr std::uint64_t kRowDomain = 0xD1B54A32D192ED03ULL;
  static constexpr std::uint64_t kBranchDomain = 0x8CB92BA72F3D8DD7ULL;
};

constexpr double hash_uniform(const GlobalHash &gh, std::uint64_t hop,
                              std::uint64_t packet_id) {
  return gh.uniform(hop, packet_id);
}

// Row index in [0, L); depends on the packet only, never on the hop.
std::size_t row_select(const GlobalHash &gh, std::uint64_t packet_id, std::size_t L);

} // namespace recipe

// rng.hpp
// Counter-based random streams: every (seed, scan point, period) triple maps
// injectively to its own engine, so scan points can run in parallel while the
// output stays bit-identical to a serial run.

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace homsim {

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // For a fixed seed, distinct stream_ids produce distinct engine seeds
  // (stream_id -> mix64(stream_id ^ c) is injective).
  std::mt19937_64 engine() const {
    const std::uint64_t mixed =
        mix64(mix64(seed) ^ mix64(stream_id ^ 0xd6e8feb86659fd93ull));
    return std::mt19937_64(mixed);
  }
};

/// Stream for one (scan point, period) cell: id = scan_point * 2^32 + period.
inline RngStream derive_stream(std::uint64_t seed, std::uint32_t scan_point,
                               std::uint32_t period) {
  return RngStream{seed, (static_cast<std::uint64_t>(scan_point) << 32) |
                             static_cast<std::uint64_t>(period)};
}

}  // namespace homsim

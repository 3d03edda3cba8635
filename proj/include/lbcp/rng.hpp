#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace lbcp {

using Rng = std::mt19937_64;

/// Deterministic substream for (master seed, stream ids...). Two calls with the
/// same arguments yield identical generators, so per-draw and per-replicate
/// work can be scheduled in any order without changing results.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * ids.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t id : ids) {
    words.push_back(static_cast<std::uint32_t>(id));
    words.push_back(static_cast<std::uint32_t>(id >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Stream tags keep unrelated consumers of one master seed apart.
namespace stream {
inline constexpr std::uint64_t data = 0x64617461;
inline constexpr std::uint64_t model_prior = 0x6d707269;
inline constexpr std::uint64_t evidence = 0x65766964;
inline constexpr std::uint64_t solver = 0x736f6c76;
}  // namespace stream

}  // namespace lbcp

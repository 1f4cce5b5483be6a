#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace sefdm {

/// Independent generator for a position in an experiment (master seed, point,
/// frame, stream ...). Streams do not depend on evaluation order.
inline std::mt19937_64 derive_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return derive_rng(master, path)();
}

}  // namespace sefdm

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fden {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named stream derived from a base seed. Streams with different
/// names never share state, so adding draws to one leaves the others intact.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::string_view name) {
  return mix64(base ^ mix64(hash_name(name)));
}

inline Rng make_stream(std::uint64_t base, std::string_view name) {
  return Rng(stream_seed(base, name));
}

}  // namespace fden

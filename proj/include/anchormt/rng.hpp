#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace anchormt {

// All randomness in the project flows from one master seed, split into
// independent streams by name ("synth/corpus", "at/shuffle", ...). Adding a
// consumer never perturbs another stream.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_name(std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::mt19937_64 make_stream(uint64_t master_seed, std::string_view stream) {
  return std::mt19937_64(splitmix64(master_seed ^ hash_name(stream)));
}

using Rng = std::mt19937_64;

}  // namespace anchormt

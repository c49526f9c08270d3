#pragma once

#include <cstdint>
#include <random>

namespace balkest {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijective counter hash.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of replicate `index` under master seed `master`: hash(master xor index).
// Depends only on (master, index), never on scheduling.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ index);
}

// Independent engines for the three primitive sequences of one simulated
// path. Keeping them apart lets runs with different server counts share the
// same arrival, patience and service realizations.
struct StreamSet {
  explicit StreamSet(std::uint64_t seed)
      : arrivals(splitmix64(seed ^ 0x61727276ULL)),
        patience(splitmix64(seed ^ 0x70617469ULL)),
        service(splitmix64(seed ^ 0x73727663ULL)) {}

  Rng arrivals;
  Rng patience;
  Rng service;
};

}  // namespace balkest

#pragma once

#include <cstdint>
#include <random>

namespace unionrec {

using Rng = std::mt19937_64;

// Tags separating the random streams of one trial.
enum class Purpose : std::uint64_t {
  support = 1,
  signal = 2,
  matrix = 3,
  noise = 4,
  basis = 5,
  pairwise = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by (master, point, unit, purpose, attempt).
/// `unit` is a trial index, or a matrix-block index for Purpose::matrix.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point, std::uint64_t unit,
                                 Purpose purpose, std::uint64_t attempt = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (point + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (unit + 0x85157af5ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return splitmix64(h ^ attempt);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace unionrec

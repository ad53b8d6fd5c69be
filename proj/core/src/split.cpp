#include "kar/split.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace kar {

std::vector<std::vector<Eigen::Index>> random_split(
    Eigen::Index n, const std::vector<Eigen::Index>& sizes,
    std::uint64_t seed) {
  if (n < 1) throw InvalidInput("random_split needs at least one index");
  if (sizes.empty()) throw InvalidInput("random_split needs block sizes");
  Eigen::Index total = 0;
  for (Eigen::Index s : sizes) {
    if (s < 1) throw InvalidInput("random_split block sizes must be >= 1");
    total += s;
  }
  if (total != n) throw InvalidInput("random_split block sizes must sum to n");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<Eigen::Index>> blocks;
  blocks.reserve(sizes.size());
  auto it = perm.begin();
  for (Eigen::Index s : sizes) {
    blocks.emplace_back(it, it + s);
    it += s;
  }
  return blocks;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the stream-offset seed.
  std::uint64_t v = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
  v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
  return v ^ (v >> 31);
}

}  // namespace kar

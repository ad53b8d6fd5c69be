#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kar/errors.hpp"

namespace kar {

// Partitions {0, ..., n-1} into consecutive blocks of a seeded uniform
// permutation. sizes must sum to n; every block size must be >= 1.
std::vector<std::vector<Eigen::Index>> random_split(
    Eigen::Index n, const std::vector<Eigen::Index>& sizes,
    std::uint64_t seed);

// Decorrelates seed streams that share a base seed (splitmix64 step).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace kar

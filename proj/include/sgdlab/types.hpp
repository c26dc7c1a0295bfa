#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

using ParamMap = std::map<std::string, std::vector<double>>;

// SplitMix64 finalizer. Bijective on 64-bit words, so distinct inputs never
// collide before the final xor-shift.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-run seed derived from (base_seed, run_index). Any subset of an ensemble
// can be reproduced without replaying the other runs.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t run_index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(run_index));
}

}  // namespace sgdlab

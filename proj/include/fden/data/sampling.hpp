// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "fden/core/tensor.hpp"

namespace fden::data {

/// Epoch-style minibatches: walks a seeded permutation of `pool` and
/// reshuffles once fewer than `batch` rows remain.
class BatchSampler {
 public:
  BatchSampler(std::vector<std::size_t> pool, std::size_t batch, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::vector<std::size_t> pool_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

/// n draws of a standard bivariate normal with correlation rho.
Tensor sample_gaussian_pair(double rho, std::size_t n, std::uint64_t seed);

struct EpisodeItem {
  std::size_t index;  // row in the source dataset
  int label;
};

/// C-way K-shot task: C*K support items and one query.
struct Episode {
  std::vector<EpisodeItem> support;
  EpisodeItem query;
  int ways = 0;
  int shots = 0;
};

class EpisodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Samples `ways` classes from `class_pool` without replacement, then `shots`
/// support rows per class and one query per episode from a sampled class, never
/// reusing a support row. Only rows listed in `candidates` are eligible.
Episode make_episode(const Labels& labels, const std::vector<std::size_t>& candidates, int ways,
                     int shots, const std::vector<int>& class_pool, std::uint64_t seed);

/// Same, with every row eligible.
Episode make_episode(const Labels& labels, int ways, int shots, const std::vector<int>& class_pool,
                     std::uint64_t seed);

}  // namespace fden::data

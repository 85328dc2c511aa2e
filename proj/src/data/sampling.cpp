// SPDX-License-Identifier: Apache-2.0
#include "fden/data/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fden/core/rng.hpp"

namespace fden::data {

BatchSampler::BatchSampler(std::vector<std::size_t> pool, std::size_t batch, std::uint64_t seed)
    : pool_(std::move(pool)), batch_(batch), rng_(stream_seed(seed, "batches")) {
  if (batch_ == 0 || batch_ > pool_.size()) {
    throw std::invalid_argument("batch size " + std::to_string(batch_) + " invalid for pool of " +
                                std::to_string(pool_.size()));
  }
  std::shuffle(pool_.begin(), pool_.end(), rng_);
}

std::vector<std::size_t> BatchSampler::next() {
  if (cursor_ + batch_ > pool_.size()) {
    std::shuffle(pool_.begin(), pool_.end(), rng_);
    cursor_ = 0;
  }
  std::vector<std::size_t> out(pool_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               pool_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
  cursor_ += batch_;
  return out;
}

Tensor sample_gaussian_pair(double rho, std::size_t n, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("correlation must satisfy |rho| < 1");
  Rng rng = make_stream(seed, "gaussian_pair");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tail = std::sqrt(1.0 - rho * rho);
  Tensor out(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double a = normal(rng);
    const double b = normal(rng);
    out(i, 0) = a;
    out(i, 1) = rho * a + tail * b;
  }
  return out;
}

Episode make_episode(const Labels& labels, const std::vector<std::size_t>& candidates, int ways,
                     int shots, const std::vector<int>& class_pool, std::uint64_t seed) {
  if (ways < 1 || shots < 1) throw EpisodeError("ways and shots must be positive");
  if (static_cast<int>(class_pool.size()) < ways) {
    throw EpisodeError("class pool has " + std::to_string(class_pool.size()) + " classes, need " +
                       std::to_string(ways));
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (int c : class_pool) by_class[c];
  if (static_cast<int>(by_class.size()) != static_cast<int>(class_pool.size())) {
    throw EpisodeError("class pool contains duplicates");
  }
  for (std::size_t i : candidates) {
    if (i >= labels.size()) throw EpisodeError("candidate row out of range");
    auto it = by_class.find(labels[i]);
    if (it != by_class.end()) it->second.push_back(i);
  }
  for (const auto& [c, rows] : by_class) {
    if (static_cast<int>(rows.size()) < shots + 1) {
      throw EpisodeError("class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                         " rows, need " + std::to_string(shots + 1));
    }
  }
  Rng rng = make_stream(seed, "episode");
  std::vector<int> pool = class_pool;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(ways));

  Episode ep;
  ep.ways = ways;
  ep.shots = shots;
  std::uniform_int_distribution<int> pick(0, ways - 1);
  const int query_slot = pick(rng);
  for (int k = 0; k < ways; ++k) {
    std::vector<std::size_t> rows = by_class[pool[static_cast<std::size_t>(k)]];
    std::shuffle(rows.begin(), rows.end(), rng);
    for (int s = 0; s < shots; ++s) ep.support.push_back({rows[static_cast<std::size_t>(s)], pool[static_cast<std::size_t>(k)]});
    if (k == query_slot) ep.query = {rows[static_cast<std::size_t>(shots)], pool[static_cast<std::size_t>(k)]};
  }
  return ep;
}

Episode make_episode(const Labels& labels, int ways, int shots, const std::vector<int>& class_pool,
                     std::uint64_t seed) {
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), 0);
  return make_episode(labels, all, ways, shots, class_pool, seed);
}

}  // namespace fden::data

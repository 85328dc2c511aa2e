// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fden/core/tensor.hpp"
#include "fden/data/shapes.hpp"
#include "fden/host/host.hpp"
#include "fden/model/fden.hpp"

namespace fden::metrics {

/// Pearson correlation between every pair of columns of `units` [n, m].
/// Symmetric with an exact unit diagonal. Throws std::invalid_argument for a
/// constant column or fewer than two rows.
Tensor rsa_matrix(const Tensor& units);

/// Columns z_0.. followed by f0_0.., f1_0.. for `factors` factors of width `dim`.
std::vector<std::string> rsa_labels(int dim, int factors);

/// z, then every factor, side by side.
Tensor rsa_units(const Tensor& z, const model::FactorSet& fs);

/// Square CSV grid with `labels` as header row and first column.
void write_matrix_csv(const Tensor& m, const std::vector<std::string>& labels, std::ostream& out);

struct EpisodeConfig {
  int ways = 3;
  int shots = 1;
  int episodes = 1000;
  std::vector<int> class_pool;             // classes eligible for episodes
  std::vector<std::size_t> candidates;     // eligible rows; empty means all
  std::uint64_t seed = 0;
};

/// Prototype matching: each query goes to the class whose mean support vector
/// is nearest in squared Euclidean distance. Returns the mean query accuracy.
double episodic_eval(const Tensor& vectors, const Labels& labels, const EpisodeConfig& config);

/// Same on factor `factor` of the decomposed host code of every image, with
/// the dataset's shape x scale identity as the class label.
double episodic_eval(const model::FdenModel& fden, const host::HostModel& host,
                     const data::ShapeDataset& ds, int factor, const EpisodeConfig& config);

}  // namespace fden::metrics

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "fden/core/tensor.hpp"

namespace fden::metrics {

/// Codes paired with ground-truth factor indices, one column per factor.
struct CodeFactorMatrix {
  Tensor codes;                 // [n, d_code]
  std::vector<Labels> factors;  // d_factor columns of length n

  std::size_t size() const { return static_cast<std::size_t>(codes.rows()); }
  /// Throws std::invalid_argument on row mismatch or a factor with one value.
  void validate() const;
};

inline constexpr int kDefaultBins = 20;

/// Equal-count binning of one column. Tied values always share a bin.
Labels discretize_column(const Eigen::Ref<const Eigen::VectorXd>& column, int bins = kDefaultBins);
std::vector<Labels> discretize(const Tensor& codes, int bins = kDefaultBins);

/// I(code unit j; factor k) on binned codes, [d_code, d_factor].
Tensor mi_matrix(const CodeFactorMatrix& cf, int bins = kDefaultBins);

/// Mean over factors of the normalized gap between the two most informative units.
double mig(const CodeFactorMatrix& cf, int bins = kDefaultBins);

struct VoteConfig {
  int train_votes = 10000;
  int eval_votes = 5000;
  int batch = 64;
  std::uint64_t seed = 0;
  std::vector<int> factors;  // evaluated factor columns; empty means all
};

/// Majority-vote accuracy of the least-variance (globally normalized) unit
/// under batches sharing one factor value. Units with zero variance over the
/// whole set are left out and reported through `excluded`.
double factor_vae_metric(const CodeFactorMatrix& cf, const VoteConfig& config = {},
                         std::vector<std::size_t>* excluded = nullptr);

/// Accuracy of a linear softmax classifier predicting the fixed factor from
/// the mean absolute code difference over `batch` pairs sharing it.
double beta_vae_metric(const CodeFactorMatrix& cf, const VoteConfig& config = {},
                       std::vector<std::size_t>* excluded = nullptr);

struct DciScores {
  double disentanglement = 0.0;
  double completeness = 0.0;
  double informativeness = 0.0;
};

/// D and C from an importance matrix [d_code, d_factor]; informativeness is left 0.
DciScores dci_from_importance(const Tensor& importance);

/// Importance is the mutual-information matrix normalized per factor;
/// informativeness is the mean in-sample accuracy of a nearest-centroid
/// predictor of each factor from the raw codes.
DciScores dci(const CodeFactorMatrix& cf, int bins = kDefaultBins);

}  // namespace fden::metrics

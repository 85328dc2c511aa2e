// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "fden/core/tensor.hpp"

namespace fden::metrics {

/// Mutual information of a standard bivariate normal with correlation rho, in nats.
double analytic_gaussian_mi(double rho);

/// Plug-in entropy of a discrete column, in nats.
double entropy(const Labels& a);

/// Mutual information of a joint probability table (rows x, columns y).
/// Entries must be nonnegative and sum to 1 within 1e-9.
double mi_from_joint(const Tensor& p);

/// Plug-in mutual information from the empirical joint table of two columns.
/// Values may be any integers; 0 log 0 = 0.
double discrete_mi(const Labels& a, const Labels& b);

struct MiEstimatorConfig {
  std::vector<int> hidden = {64, 64};
  int steps = 5000;
  int batch = 512;
  double lr = 1e-3;
  int smoothing = 500;  // trailing steps averaged for the returned value
  std::uint64_t seed = 0;

  void validate() const;
};

struct MiEstimate {
  double value = 0.0;                // trailing mean of the objective
  std::vector<double> objective;     // per-step minibatch objective
};

/// Donsker-Varadhan lower bound  E_P[T] - log E_Q[exp T]  maximized over a
/// leaky-ReLU network T(x, y). Q pairs x with a random permutation of y inside
/// each minibatch.
MiEstimate dv_mi_estimate(const Tensor& x, const Tensor& y, const MiEstimatorConfig& config = {});

}  // namespace fden::metrics

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "fden/core/tape.hpp"

namespace fden::ad {

// Linear algebra.
Var matmul(Var a, Var b);
/// a[rows, n] + bias[1, n] broadcast over rows.
Var add_bias(Var a, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
/// Elementwise a * mask where mask is a constant array.
Var mul_constant(Var a, const Tensor& mask);
Var square(Var a);

// Activations.
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);

/// Identity forward; the backward pass multiplies the upstream gradient by
/// -constant.
Var grad_reverse(Var a, double constant = 1.0);

/// Per-feature normalization with batch statistics, then gamma * xhat + beta.
/// Writes the batch mean and biased variance to the out-params.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean,
                     RowVector* batch_var);
/// Same affine map using fixed statistics (eval mode).
Var batch_norm_eval(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                    double eps);

// Structure.
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index width);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
/// out.row(i) = a.row(index[i]).
Var gather_rows(Var a, const std::vector<std::size_t>& index);

// Reductions to 1x1.
Var sum_all(Var a);
Var mean_all(Var a);
/// Mean over rows of the squared Euclidean row norm of (a - b).
Var mean_row_sq_dist(Var a, Var b);
/// log(mean(exp(a))) over every element, computed with max subtraction.
Var log_mean_exp(Var a);
/// Mean softmax cross-entropy of logits[rows, classes] against integer labels.
Var softmax_cross_entropy(Var logits, const Labels& labels);

}  // namespace fden::ad

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fden/core/ops.hpp"
#include "fden/core/rng.hpp"
#include "fden/model/fden.hpp"

namespace fden::model {

enum class MarginalMode { one_vs_all, full_shuffle };

/// Row permutations defining the product-of-marginals batches.
/// perms[m][k] permutes factor k in marginal batch m; an empty entry leaves
/// the factor in place. f_0 is never shuffled.
struct TcPlan {
  MarginalMode mode = MarginalMode::one_vs_all;
  std::size_t batch = 0;
  std::vector<std::vector<std::vector<std::size_t>>> perms;

  std::size_t marginal_batches() const { return perms.size(); }
};

/// one_vs_all: N batches, batch k shuffling only f_k. full_shuffle: one batch
/// with every f_k (k >= 1) under its own permutation. Throws for batch < 2.
TcPlan make_tc_plan(std::size_t batch, int n_factors, MarginalMode mode, Rng& rng);

struct TcBatches {
  Tensor joint;                  // f_0 | .. | f_N, rows untouched
  std::vector<Tensor> marginals; // same layout, shuffled per plan
};

TcBatches tc_batches(const FactorSet& fs, const TcPlan& plan);
TcBatches tc_batches(const FactorSet& fs, MarginalMode mode, std::uint64_t seed);

/// Joint rows followed by every marginal batch, stacked along rows, on a trace.
ad::Var tc_stat_input(const std::vector<ad::Var>& factors, const TcPlan& plan);

/// mean(t_joint) - log mean exp(t_marginal) over all marginal rows.
ad::Var loss_lm(ad::Var t_joint, ad::Var t_marginal);
double loss_lm(const Tensor& t_joint, const Tensor& t_marginal);

/// Batch mean of ||z - z~||^2, plus lambda times the same for x when given.
ad::Var loss_lr(ad::Var z, ad::Var z_tilde, std::optional<ad::Var> x, std::optional<ad::Var> x_tilde,
                double lambda);
double loss_lr(const Tensor& z, const Tensor& z_tilde, const Tensor* x, const Tensor* x_tilde,
               double lambda);

/// Mean over heads of the softmax cross-entropy.
ad::Var loss_lc(const std::vector<ad::Var>& logits, const std::vector<const Labels*>& labels);
double loss_lc(const std::vector<Tensor>& logits, const std::vector<Labels>& labels);

}  // namespace fden::model

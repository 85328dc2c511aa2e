// SPDX-License-Identifier: Apache-2.0
#include "fden/model/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fden::model {

namespace {

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

void check_plan(const TcPlan& plan, std::size_t factors, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != plan.batch) {
    throw ShapeError("tc_batches: plan built for batch " + std::to_string(plan.batch) + ", got " +
                     std::to_string(rows));
  }
  for (const auto& batch : plan.perms) {
    if (batch.size() != factors) throw ShapeError("tc_batches: plan factor count mismatch");
  }
}

}  // namespace

TcPlan make_tc_plan(std::size_t batch, int n_factors, MarginalMode mode, Rng& rng) {
  if (batch < 2) throw std::invalid_argument("tc_batches: shuffling needs a batch of at least 2");
  if (n_factors < 1) throw std::invalid_argument("tc_batches: need a supervised factor");
  TcPlan plan;
  plan.mode = mode;
  plan.batch = batch;
  const std::size_t total = static_cast<std::size_t>(n_factors) + 1;
  if (mode == MarginalMode::one_vs_all) {
    for (std::size_t k = 1; k < total; ++k) {
      std::vector<std::vector<std::size_t>> b(total);
      b[k] = permutation(batch, rng);
      plan.perms.push_back(std::move(b));
    }
  } else {
    std::vector<std::vector<std::size_t>> b(total);
    for (std::size_t k = 1; k < total; ++k) b[k] = permutation(batch, rng);
    plan.perms.push_back(std::move(b));
  }
  return plan;
}

TcBatches tc_batches(const FactorSet& fs, const TcPlan& plan) {
  check_plan(plan, fs.count(), fs.batch());
  TcBatches out;
  out.joint = fs.concat();
  const Eigen::Index d = fs.factors.front().cols();
  for (const auto& batch : plan.perms) {
    Tensor m = out.joint;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto& p = batch[k];
      for (std::size_t r = 0; r < p.size(); ++r) {
        m.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k) * d, 1, d) =
            fs[k].row(static_cast<Eigen::Index>(p[r]));
      }
    }
    out.marginals.push_back(std::move(m));
  }
  return out;
}

TcBatches tc_batches(const FactorSet& fs, MarginalMode mode, std::uint64_t seed) {
  Rng rng = make_stream(seed, "shuffle");
  return tc_batches(fs, make_tc_plan(static_cast<std::size_t>(fs.batch()),
                                     static_cast<int>(fs.count()) - 1, mode, rng));
}

ad::Var tc_stat_input(const std::vector<ad::Var>& factors, const TcPlan& plan) {
  if (factors.empty()) throw ShapeError("tc_stat_input: no factors");
  check_plan(plan, factors.size(), factors.front().rows());
  std::vector<ad::Var> rows{ad::concat_cols(factors)};
  for (const auto& batch : plan.perms) {
    std::vector<ad::Var> cols;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      cols.push_back(batch[k].empty() ? factors[k] : ad::gather_rows(factors[k], batch[k]));
    }
    rows.push_back(ad::concat_cols(cols));
  }
  return ad::concat_rows(rows);
}

ad::Var loss_lm(ad::Var t_joint, ad::Var t_marginal) {
  return ad::sub(ad::mean_all(t_joint), ad::log_mean_exp(t_marginal));
}

double loss_lm(const Tensor& t_joint, const Tensor& t_marginal) {
  if (t_joint.size() == 0 || t_marginal.size() == 0) throw ShapeError("loss_lm: empty batch");
  const double mx = t_marginal.maxCoeff();
  const double lme = mx + std::log((t_marginal.array() - mx).exp().mean());
  return t_joint.mean() - lme;
}

ad::Var loss_lr(ad::Var z, ad::Var z_tilde, std::optional<ad::Var> x, std::optional<ad::Var> x_tilde,
                double lambda) {
  ad::Var l = ad::mean_row_sq_dist(z, z_tilde);
  if (x && x_tilde && lambda != 0.0) l = ad::add(l, ad::scale(ad::mean_row_sq_dist(*x, *x_tilde), lambda));
  return l;
}

double loss_lr(const Tensor& z, const Tensor& z_tilde, const Tensor* x, const Tensor* x_tilde,
               double lambda) {
  require_same_shape(z, z_tilde, "loss_lr");
  double l = (z - z_tilde).squaredNorm() / static_cast<double>(z.rows());
  if (x && x_tilde && lambda != 0.0) {
    require_same_shape(*x, *x_tilde, "loss_lr");
    l += lambda * (*x - *x_tilde).squaredNorm() / static_cast<double>(x->rows());
  }
  return l;
}

ad::Var loss_lc(const std::vector<ad::Var>& logits, const std::vector<const Labels*>& labels) {
  if (logits.empty() || logits.size() != labels.size()) {
    throw std::invalid_argument("loss_lc: need one label set per head");
  }
  ad::Var total = ad::softmax_cross_entropy(logits[0], *labels[0]);
  for (std::size_t i = 1; i < logits.size(); ++i) {
    total = ad::add(total, ad::softmax_cross_entropy(logits[i], *labels[i]));
  }
  return ad::scale(total, 1.0 / static_cast<double>(logits.size()));
}

double loss_lc(const std::vector<Tensor>& logits, const std::vector<Labels>& labels) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  std::vector<const Labels*> ls;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    vars.push_back(tape.constant_ref(logits[i]));
    ls.push_back(i < labels.size() ? &labels[i] : nullptr);
  }
  if (labels.size() != logits.size()) throw std::invalid_argument("loss_lc: need one label set per head");
  return loss_lc(vars, ls).value()(0, 0);
}

}  // namespace fden::model

// SPDX-License-Identifier: Apache-2.0
#include "fden/metrics/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "fden/core/optim.hpp"
#include "fden/core/rng.hpp"
#include "fden/metrics/mi.hpp"

namespace fden::metrics {

namespace {

// Rows holding each value of one factor column.
using ValueIndex = std::map<int, std::vector<std::size_t>>;

ValueIndex index_values(const Labels& f) {
  ValueIndex out;
  for (std::size_t i = 0; i < f.size(); ++i) out[f[i]].push_back(i);
  return out;
}

std::vector<int> evaluated_factors(const CodeFactorMatrix& cf, const VoteConfig& config) {
  std::vector<int> ks = config.factors;
  if (ks.empty()) {
    for (std::size_t k = 0; k < cf.factors.size(); ++k) ks.push_back(static_cast<int>(k));
  }
  for (int k : ks) {
    if (k < 0 || static_cast<std::size_t>(k) >= cf.factors.size()) {
      throw std::out_of_range("vote metric: factor " + std::to_string(k) + " does not exist");
    }
  }
  return ks;
}

void check_votes(const VoteConfig& c) {
  if (c.train_votes < 1 || c.eval_votes < 1 || c.batch < 2) {
    throw std::invalid_argument("vote metric: votes must be positive and batch at least 2");
  }
}

// Codes divided by each unit's standard deviation, restricted to units that vary.
Tensor normalized_codes(const Tensor& codes, std::vector<std::size_t>* excluded) {
  const RowVector mean = codes.colwise().mean();
  const RowVector sd = ((codes.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  std::vector<Eigen::Index> keep;
  if (excluded) excluded->clear();
  for (Eigen::Index j = 0; j < codes.cols(); ++j) {
    if (sd[j] > 1e-12) {
      keep.push_back(j);
    } else if (excluded) {
      excluded->push_back(static_cast<std::size_t>(j));
    }
  }
  if (keep.empty()) throw std::invalid_argument("vote metric: every code unit is constant");
  Tensor out(codes.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = codes.col(keep[c]) / sd[keep[c]];
  }
  return out;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

double normalized_entropy(const Eigen::Ref<const Eigen::VectorXd>& w) {
  const double total = w.sum();
  if (w.size() < 2 || total <= 0.0) return 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double p = w[i] / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(w.size()));
}

double centroid_accuracy(const Tensor& codes, const Labels& f) {
  const ValueIndex groups = index_values(f);
  Tensor centroids(static_cast<Eigen::Index>(groups.size()), codes.cols());
  std::vector<int> values;
  for (const auto& [v, rows] : groups) {
    RowVector c = RowVector::Zero(codes.cols());
    for (std::size_t r : rows) c += codes.row(static_cast<Eigen::Index>(r));
    centroids.row(static_cast<Eigen::Index>(values.size())) = c / static_cast<double>(rows.size());
    values.push_back(v);
  }
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < codes.rows(); ++i) {
    Eigen::Index best = 0;
    (centroids.rowwise() - codes.row(i)).rowwise().squaredNorm().minCoeff(&best);
    hits += values[static_cast<std::size_t>(best)] == f[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(codes.rows());
}

}  // namespace

void CodeFactorMatrix::validate() const {
  if (codes.rows() == 0 || codes.cols() == 0) throw std::invalid_argument("code matrix is empty");
  if (factors.empty()) throw std::invalid_argument("no factor columns");
  if (!codes.allFinite()) throw std::invalid_argument("codes contain non-finite values");
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k].size() != size()) {
      throw std::invalid_argument("factor column " + std::to_string(k) + " has " +
                                  std::to_string(factors[k].size()) + " rows, codes have " +
                                  std::to_string(size()));
    }
    if (std::all_of(factors[k].begin(), factors[k].end(), [&](int v) { return v == factors[k][0]; })) {
      throw std::invalid_argument("factor column " + std::to_string(k) + " is constant");
    }
  }
}

Labels discretize_column(const Eigen::Ref<const Eigen::VectorXd>& column, int bins) {
  if (bins < 1) throw std::invalid_argument("discretize: bins must be positive");
  const auto n = static_cast<std::size_t>(column.size());
  if (n == 0) return {};
  std::vector<double> sorted(column.data(), column.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) edges.push_back(sorted[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins)]);
  Labels out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), column[static_cast<Eigen::Index>(i)]) -
                              edges.begin());
  }
  return out;
}

std::vector<Labels> discretize(const Tensor& codes, int bins) {
  std::vector<Labels> out;
  out.reserve(static_cast<std::size_t>(codes.cols()));
  for (Eigen::Index j = 0; j < codes.cols(); ++j) out.push_back(discretize_column(codes.col(j), bins));
  return out;
}

Tensor mi_matrix(const CodeFactorMatrix& cf, int bins) {
  cf.validate();
  const std::vector<Labels> binned = discretize(cf.codes, bins);
  Tensor m(cf.codes.cols(), static_cast<Eigen::Index>(cf.factors.size()));
  for (std::size_t j = 0; j < binned.size(); ++j) {
    for (std::size_t k = 0; k < cf.factors.size(); ++k) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = discrete_mi(binned[j], cf.factors[k]);
    }
  }
  return m;
}

double mig(const CodeFactorMatrix& cf, int bins) {
  const Tensor m = mi_matrix(cf, bins);
  double total = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    std::vector<double> col(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) col[static_cast<std::size_t>(j)] = m(j, k);
    std::sort(col.begin(), col.end(), std::greater<>());
    const double second = col.size() > 1 ? col[1] : 0.0;
    total += (col[0] - second) / entropy(cf.factors[static_cast<std::size_t>(k)]);
  }
  return total / static_cast<double>(m.cols());
}

double factor_vae_metric(const CodeFactorMatrix& cf, const VoteConfig& config,
                         std::vector<std::size_t>* excluded) {
  cf.validate();
  check_votes(config);
  const std::vector<int> ks = evaluated_factors(cf, config);
  const Tensor z = normalized_codes(cf.codes, excluded);
  std::vector<ValueIndex> groups;
  for (const Labels& f : cf.factors) groups.push_back(index_values(f));

  Rng rng = make_stream(config.seed, "metrics.fvm");
  std::uniform_int_distribution<std::size_t> any_row(0, cf.size() - 1);
  std::uniform_int_distribution<std::size_t> any_factor(0, ks.size() - 1);
  Tensor batch(config.batch, z.cols());
  auto vote = [&](std::size_t& factor_slot) {
    factor_slot = any_factor(rng);
    const auto k = static_cast<std::size_t>(ks[factor_slot]);
    const auto& rows = groups[k].at(cf.factors[k][any_row(rng)]);
    for (Eigen::Index b = 0; b < batch.rows(); ++b) batch.row(b) = z.row(static_cast<Eigen::Index>(pick(rows, rng)));
    const RowVector mean = batch.colwise().mean();
    Eigen::Index unit = 0;
    (batch.rowwise() - mean).array().square().colwise().sum().minCoeff(&unit);
    return static_cast<std::size_t>(unit);
  };

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(z.cols(), static_cast<Eigen::Index>(ks.size()));
  for (int v = 0; v < config.train_votes; ++v) {
    std::size_t slot = 0;
    const std::size_t unit = vote(slot);
    counts(static_cast<Eigen::Index>(unit), static_cast<Eigen::Index>(slot)) += 1.0;
  }
  std::vector<std::size_t> label(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < counts.rows(); ++j) {
    Eigen::Index best = 0;
    counts.row(j).maxCoeff(&best);
    label[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
  }
  int hits = 0;
  for (int v = 0; v < config.eval_votes; ++v) {
    std::size_t slot = 0;
    const std::size_t unit = vote(slot);
    hits += label[unit] == slot;
  }
  return static_cast<double>(hits) / static_cast<double>(config.eval_votes);
}

double beta_vae_metric(const CodeFactorMatrix& cf, const VoteConfig& config,
                       std::vector<std::size_t>* excluded) {
  cf.validate();
  check_votes(config);
  const std::vector<int> ks = evaluated_factors(cf, config);
  const Tensor z = normalized_codes(cf.codes, excluded);
  std::vector<ValueIndex> groups;
  for (const Labels& f : cf.factors) groups.push_back(index_values(f));

  Rng rng = make_stream(config.seed, "metrics.bvm");
  std::uniform_int_distribution<std::size_t> any_row(0, cf.size() - 1);
  std::uniform_int_distribution<std::size_t> any_factor(0, ks.size() - 1);
  auto sample = [&](int count, Tensor& features, Labels& labels) {
    features.resize(count, z.cols());
    labels.resize(static_cast<std::size_t>(count));
    for (int v = 0; v < count; ++v) {
      const std::size_t slot = any_factor(rng);
      const auto k = static_cast<std::size_t>(ks[slot]);
      RowVector diff = RowVector::Zero(z.cols());
      for (int b = 0; b < config.batch; ++b) {
        const std::size_t a = any_row(rng);
        const std::size_t c = pick(groups[k].at(cf.factors[k][a]), rng);
        diff += (z.row(static_cast<Eigen::Index>(a)) - z.row(static_cast<Eigen::Index>(c))).cwiseAbs();
      }
      features.row(v) = diff / static_cast<double>(config.batch);
      labels[static_cast<std::size_t>(v)] = static_cast<int>(slot);
    }
  };
  Tensor x_train;
  Tensor x_eval;
  Labels y_train;
  Labels y_eval;
  sample(config.train_votes, x_train, y_train);
  sample(config.eval_votes, x_eval, y_eval);

  const auto classes = static_cast<Eigen::Index>(ks.size());
  ad::Parameter w("bvm.weight", Tensor::Zero(z.cols(), classes));
  ad::Parameter bias("bvm.bias", Tensor::Zero(1, classes));
  Adam opt({&w, &bias}, AdamConfig{0.05, 0.9, 0.999, 1e-8});
  Tensor onehot = Tensor::Zero(x_train.rows(), classes);
  for (std::size_t i = 0; i < y_train.size(); ++i) onehot(static_cast<Eigen::Index>(i), y_train[i]) = 1.0;
  for (int it = 0; it < 1000; ++it) {
    Tensor p = (x_train * w.value).rowwise() + RowVector(bias.value.row(0));
    p = (p.colwise() - p.rowwise().maxCoeff()).array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    const Tensor g = (p - onehot) / static_cast<double>(x_train.rows());
    w.grad = x_train.transpose() * g;
    bias.grad = g.colwise().sum();
    opt.step();
  }
  const Tensor logits = (x_eval * w.value).rowwise() + RowVector(bias.value.row(0));
  int hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    hits += best == y_eval[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

DciScores dci_from_importance(const Tensor& r) {
  if (r.size() == 0 || (r.array() < 0.0).any() || !r.allFinite()) {
    throw std::invalid_argument("dci: importance must be a nonempty nonnegative matrix");
  }
  const double total = r.sum();
  if (!(total > 0.0)) throw std::invalid_argument("dci: importance matrix is all zero");
  DciScores s;
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    s.disentanglement += r.row(j).sum() / total * (1.0 - normalized_entropy(r.row(j).transpose()));
  }
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    s.completeness += r.col(k).sum() / total * (1.0 - normalized_entropy(r.col(k)));
  }
  return s;
}

DciScores dci(const CodeFactorMatrix& cf, int bins) {
  Tensor r = mi_matrix(cf, bins);
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    const double s = r.col(k).sum();
    if (s > 0.0) r.col(k) /= s;
  }
  DciScores out = dci_from_importance(r);
  double acc = 0.0;
  for (const Labels& f : cf.factors) acc += centroid_accuracy(cf.codes, f);
  out.informativeness = acc / static_cast<double>(cf.factors.size());
  return out;
}

}  // namespace fden::metrics

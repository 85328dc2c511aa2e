// SPDX-License-Identifier: Apache-2.0
#include "fden/metrics/mi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fden/core/mlp.hpp"
#include "fden/core/optim.hpp"
#include "fden/core/rng.hpp"

namespace fden::metrics {

namespace {

// Maps arbitrary integer values onto 0..k-1 in ascending order.
Labels dense_codes(const Labels& a, int& k) {
  Labels sorted = a;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  k = static_cast<int>(sorted.size());
  Labels out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), a[i]) - sorted.begin());
  }
  return out;
}

}  // namespace

double analytic_gaussian_mi(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("analytic_gaussian_mi: |rho| must be below 1, got " + std::to_string(rho));
  }
  return -0.5 * std::log1p(-rho * rho);
}

double entropy(const Labels& a) {
  if (a.empty()) throw std::invalid_argument("entropy: empty input");
  int k = 0;
  const Labels c = dense_codes(a, k);
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int v : c) counts[static_cast<std::size_t>(v)] += 1.0;
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (double m : counts) h -= m / n * std::log(m / n);
  return h;
}

double mi_from_joint(const Tensor& p) {
  if (p.size() == 0) throw std::invalid_argument("mi_from_joint: empty table");
  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("mi_from_joint: table is not a probability distribution");
  }
  const Eigen::VectorXd px = p.rowwise().sum();
  const RowVector py = p.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (pij > 0.0) mi += pij * std::log(pij / (px[i] * py[j]));
    }
  }
  return std::max(mi, 0.0);
}

double discrete_mi(const Labels& a, const Labels& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("discrete_mi: empty input");
  if (a.size() != b.size()) {
    throw std::invalid_argument("discrete_mi: columns differ in length (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  int ka = 0;
  int kb = 0;
  const Labels ca = dense_codes(a, ka);
  const Labels cb = dense_codes(b, kb);
  Tensor joint = Tensor::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i) joint(ca[i], cb[i]) += 1.0;
  joint /= static_cast<double>(a.size());
  return mi_from_joint(joint);
}

void MiEstimatorConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("dv_mi_estimate: need at least one hidden layer");
  for (int w : hidden) {
    if (w < 1) throw std::invalid_argument("dv_mi_estimate: hidden widths must be positive");
  }
  if (steps < 1 || batch < 2 || smoothing < 1 || !(lr > 0.0)) {
    throw std::invalid_argument("dv_mi_estimate: steps, batch, smoothing and lr must be positive");
  }
}

MiEstimate dv_mi_estimate(const Tensor& x, const Tensor& y, const MiEstimatorConfig& config) {
  config.validate();
  if (x.rows() != y.rows()) {
    throw ShapeError("dv_mi_estimate: x has " + std::to_string(x.rows()) + " rows, y has " +
                     std::to_string(y.rows()));
  }
  if (x.rows() < 1000) throw std::invalid_argument("dv_mi_estimate: need at least 1000 samples");
  if (x.cols() < 1 || y.cols() < 1) throw ShapeError("dv_mi_estimate: empty sample columns");

  std::vector<LayerSpec> layers;
  for (int w : config.hidden) layers.push_back({w, false, 0.0, Activation::leaky_relu});
  layers.push_back({1, false, 0.0, Activation::linear});
  Mlp net("dv", static_cast<int>(x.cols() + y.cols()), layers);
  Rng init = make_stream(config.seed, "dv.init");
  init_fan_in(net, 1.0, init);
  Adam opt(net.parameters(), AdamConfig{config.lr, 0.9, 0.999, 1e-8});

  Rng draw = make_stream(config.seed, "dv.batch");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto b = static_cast<std::size_t>(std::min<Eigen::Index>(config.batch, x.rows()));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;
  std::vector<std::size_t> perm(b);

  MiEstimate out;
  out.objective.reserve(static_cast<std::size_t>(config.steps));
  Tensor input(static_cast<Eigen::Index>(2 * b), x.cols() + y.cols());
  for (int step = 0; step < config.steps; ++step) {
    if (cursor + b > n) {
      std::shuffle(order.begin(), order.end(), draw);
      cursor = 0;
    }
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), draw);
    for (std::size_t i = 0; i < b; ++i) {
      const auto r = static_cast<Eigen::Index>(order[cursor + i]);
      const auto q = static_cast<Eigen::Index>(order[cursor + perm[i]]);
      const auto joint_row = static_cast<Eigen::Index>(i);
      const auto marginal_row = static_cast<Eigen::Index>(b + i);
      input.row(joint_row) << x.row(r), y.row(r);
      input.row(marginal_row) << x.row(r), y.row(q);
    }
    cursor += b;

    opt.zero_grad();
    ad::Tape tape;
    ad::Var t = net.forward(tape, tape.constant_ref(input), Mode::train);
    const auto rows = static_cast<Eigen::Index>(b);
    ad::Var objective = ad::sub(ad::mean_all(ad::slice_rows(t, 0, rows)),
                                ad::log_mean_exp(ad::slice_rows(t, rows, rows)));
    const double value = objective.value()(0, 0);
    if (!std::isfinite(value)) {
      throw NumericError("dv_mi_estimate: objective diverged at step " + std::to_string(step));
    }
    out.objective.push_back(value);
    tape.backward(objective, -1.0);
    opt.step();
  }
  const std::size_t w = std::min(out.objective.size(), static_cast<std::size_t>(config.smoothing));
  out.value = std::accumulate(out.objective.end() - static_cast<std::ptrdiff_t>(w), out.objective.end(), 0.0) /
              static_cast<double>(w);
  return out;
}

}  // namespace fden::metrics

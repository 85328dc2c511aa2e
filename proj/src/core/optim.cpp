// SPDX-License-Identifier: Apache-2.0
#include "fden/core/optim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fden {

Adam::Adam(std::vector<ad::Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  slots_.reserve(params_.size());
  for (ad::Parameter* p : params_) {
    slots_.push_back({Tensor::Zero(p->value.rows(), p->value.cols()),
                      Tensor::Zero(p->value.rows(), p->value.cols())});
  }
}

void adam_update(Tensor& value, const Tensor& grad, AdamSlot& slot, std::int64_t t,
                 const AdamConfig& c) {
  require_same_shape(value, grad, "adam gradient");
  require_same_shape(value, slot.m, "adam first moment");
  require_same_shape(value, slot.v, "adam second moment");
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const double step = c.lr / bc1;
  const double inv_bc2 = 1.0 / bc2;
  const double b1 = c.beta1, b2 = c.beta2;
  double* w = value.data();
  double* m = slot.m.data();
  double* v = slot.v.data();
  const double* g = grad.data();
  bool finite = true;
  for (Eigen::Index i = 0, n = value.size(); i < n; ++i) {
    finite &= std::isfinite(g[i]);
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    w[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + c.eps);
  }
  if (!finite) throw NumericError("non-finite gradient reached the optimizer");
}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(params_[i]->value, params_[i]->grad, slots_[i], t_, config_);
  }
}

void Adam::zero_grad() {
  for (ad::Parameter* p : params_) p->zero_grad();
}

double clip_factor(double norm_u, double norm_m) {
  if (norm_m == 0.0) return 1.0;
  return std::min(norm_u, norm_m) / norm_m;
}

std::vector<Tensor> clip_adaptive(const std::vector<Tensor>& g_u, const std::vector<Tensor>& g_m) {
  if (g_u.size() != g_m.size()) throw ShapeError("clip_adaptive: gradient list length mismatch");
  for (std::size_t i = 0; i < g_u.size(); ++i) require_same_shape(g_u[i], g_m[i], "clip_adaptive");
  const double nm = global_norm(g_m);
  if (nm == 0.0) return g_m;
  const double k = clip_factor(global_norm(g_u), nm);
  std::vector<Tensor> out;
  out.reserve(g_m.size());
  for (const Tensor& g : g_m) out.push_back(g * k);
  return out;
}

Tensor clip_adaptive(const Tensor& g_u, const Tensor& g_m) {
  return clip_adaptive(std::vector<Tensor>{g_u}, std::vector<Tensor>{g_m}).front();
}

}  // namespace fden

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "fden/core/tape.hpp"

namespace fden {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamSlot {
  Tensor m;
  Tensor v;
};

/// Bias-corrected Adam over a fixed parameter list. Reads Parameter::grad.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ad::Parameter*> params, AdamConfig config);

  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<AdamSlot>& slots() const { return slots_; }
  const std::vector<ad::Parameter*>& params() const { return params_; }

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<AdamSlot> slots_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

/// One Adam update of `value` given `grad`; `t` is the 1-based step count.
void adam_update(Tensor& value, const Tensor& grad, AdamSlot& slot, std::int64_t t,
                 const AdamConfig& config);

/// Scale min(norm_u, norm_m) / norm_m that clip_adaptive applies; 1 when norm_m is 0.
double clip_factor(double norm_u, double norm_m);

/// Rescales g_m to norm min(|g_u|, |g_m|), keeping its direction. Norms run
/// over every coordinate of every tensor in the list. A zero g_m is returned
/// unchanged.
std::vector<Tensor> clip_adaptive(const std::vector<Tensor>& g_u, const std::vector<Tensor>& g_m);
Tensor clip_adaptive(const Tensor& g_u, const Tensor& g_m);

}  // namespace fden

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fden/core/ops.hpp"
#include "fden/core/rng.hpp"
#include "fden/core/tape.hpp"

namespace fden {

enum class Mode { train, eval };

enum class Activation { leaky_relu, linear, sigmoid };

struct LayerSpec {
  int width = 0;
  bool batch_norm = false;
  double dropout_rate = 0.0;  // applied to the layer's input, train mode only
  Activation activation = Activation::leaky_relu;
};

struct BatchNormParams {
  ad::Parameter gamma;
  ad::Parameter beta;
  RowVector running_mean;
  RowVector running_var;
};

struct DenseLayer {
  LayerSpec spec;
  ad::Parameter weight;  // [in, out]
  ad::Parameter bias;    // [1, out]
  std::optional<BatchNormParams> bn;
};

/// Fully connected stack: dropout(input) -> affine -> batch norm -> activation.
class Mlp {
 public:
  static constexpr double kBatchNormEps = 1e-5;
  static constexpr double kBatchNormMomentum = 0.9;

  Mlp() = default;
  /// Weights start at zero; see init_truncated_normal for random init.
  Mlp(std::string name, int in_dim, std::vector<LayerSpec> layers, double leaky_slope = 0.01);

  /// Differentiable forward pass recorded on `tape`. Train mode needs `rng`
  /// when any layer has dropout, and updates batch-norm running statistics.
  /// With `trainable = false` the weights enter the trace as constants.
  ad::Var forward(ad::Tape& tape, ad::Var input, Mode mode, Rng* rng = nullptr,
                  bool trainable = true);

  /// Eval-mode forward with the weights as constants; gradients reach `input` only.
  ad::Var forward_frozen(ad::Tape& tape, ad::Var input) const;

  /// Eval-mode forward without a trace.
  Tensor infer(const Tensor& input) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  int in_dim() const { return in_dim_; }
  int out_dim() const;
  double leaky_slope() const { return slope_; }
  const std::string& name() const { return name_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::string name_;
  int in_dim_ = 0;
  double slope_ = 0.01;
  std::vector<DenseLayer> layers_;
};

/// Draws from Normal(mu, sigma^2), redrawing any value outside mu +- 2 sigma.
Tensor init_truncated_normal(Eigen::Index rows, Eigen::Index cols, double mu, double sigma,
                             Rng& rng);
Tensor init_truncated_normal(Eigen::Index rows, Eigen::Index cols, double mu, double sigma,
                             std::uint64_t seed);

/// Truncated-normal weights with the given sigma; biases zero, batch norm reset.
void init_weights(Mlp& mlp, double sigma, Rng& rng);

/// Truncated-normal weights with variance gain / fan_in per layer; biases zero.
void init_fan_in(Mlp& mlp, double gain, Rng& rng);

}  // namespace fden

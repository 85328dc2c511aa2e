// SPDX-License-Identifier: Apache-2.0
#include "fden/core/mlp.hpp"

#include <cmath>
#include <utility>

namespace fden {

Mlp::Mlp(std::string name, int in_dim, std::vector<LayerSpec> layers, double leaky_slope)
    : name_(std::move(name)), in_dim_(in_dim), slope_(leaky_slope) {
  if (in_dim <= 0) throw ShapeError(name_ + ": input width must be positive");
  int prev = in_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& s = layers[i];
    if (s.width <= 0) throw ShapeError(name_ + ": layer width must be positive");
    if (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0) {
      throw std::invalid_argument(name_ + ": dropout rate must be in [0, 1)");
    }
    const std::string prefix = name_ + ".l" + std::to_string(i);
    DenseLayer layer;
    layer.spec = s;
    layer.weight = ad::Parameter(prefix + ".weight", Tensor::Zero(prev, s.width));
    layer.bias = ad::Parameter(prefix + ".bias", Tensor::Zero(1, s.width));
    if (s.batch_norm) {
      layer.bn = BatchNormParams{ad::Parameter(prefix + ".bn_gamma", Tensor::Ones(1, s.width)),
                                 ad::Parameter(prefix + ".bn_beta", Tensor::Zero(1, s.width)),
                                 RowVector::Zero(s.width), RowVector::Ones(s.width)};
    }
    layers_.push_back(std::move(layer));
    prev = s.width;
  }
}

int Mlp::out_dim() const {
  return layers_.empty() ? in_dim_ : layers_.back().spec.width;
}

namespace {

ad::Var leaf(ad::Tape& tape, ad::Parameter& p, bool trainable) {
  return trainable ? tape.param(p) : tape.constant_ref(p.value);
}

ad::Var activate(ad::Var h, Activation act, double slope) {
  switch (act) {
    case Activation::leaky_relu:
      return ad::leaky_relu(h, slope);
    case Activation::sigmoid:
      return ad::sigmoid(h);
    case Activation::linear:
      break;
  }
  return h;
}

}  // namespace

ad::Var Mlp::forward(ad::Tape& tape, ad::Var input, Mode mode, Rng* rng, bool trainable) {
  if (input.cols() != in_dim_) {
    throw ShapeError(name_ + ": input " + shape_str(input.value()) + " but expected width " +
                     std::to_string(in_dim_));
  }
  ad::Var h = input;
  for (DenseLayer& layer : layers_) {
    const double p = layer.spec.dropout_rate;
    if (mode == Mode::train && p > 0.0) {
      if (rng == nullptr) throw std::logic_error(name_ + ": train-mode dropout needs an rng");
      // Keep a unit when its 53-bit uniform draw falls below 1 - p.
      const auto cut = static_cast<std::uint64_t>((1.0 - p) * 9007199254740992.0);
      const double inv = 1.0 / (1.0 - p);
      Tensor mask(h.rows(), h.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = ((*rng)() >> 11) < cut ? inv : 0.0;
      h = ad::mul_constant(h, mask);
    }
    h = ad::add_bias(ad::matmul(h, leaf(tape, layer.weight, trainable)),
                     leaf(tape, layer.bias, trainable));
    if (layer.bn) {
      BatchNormParams& bn = *layer.bn;
      ad::Var g = leaf(tape, bn.gamma, trainable);
      ad::Var b = leaf(tape, bn.beta, trainable);
      if (mode == Mode::train) {
        RowVector mean, var;
        h = ad::batch_norm_train(h, g, b, kBatchNormEps, &mean, &var);
        bn.running_mean = kBatchNormMomentum * bn.running_mean + (1.0 - kBatchNormMomentum) * mean;
        bn.running_var = kBatchNormMomentum * bn.running_var + (1.0 - kBatchNormMomentum) * var;
      } else {
        h = ad::batch_norm_eval(h, g, b, bn.running_mean, bn.running_var, kBatchNormEps);
      }
    }
    h = activate(h, layer.spec.activation, slope_);
  }
  return h;
}

ad::Var Mlp::forward_frozen(ad::Tape& tape, ad::Var input) const {
  if (input.cols() != in_dim_) {
    throw ShapeError(name_ + ": input " + shape_str(input.value()) + " but expected width " +
                     std::to_string(in_dim_));
  }
  ad::Var h = input;
  for (const DenseLayer& layer : layers_) {
    h = ad::add_bias(ad::matmul(h, tape.constant_ref(layer.weight.value)), tape.constant_ref(layer.bias.value));
    if (layer.bn) {
      const BatchNormParams& bn = *layer.bn;
      h = ad::batch_norm_eval(h, tape.constant_ref(bn.gamma.value), tape.constant_ref(bn.beta.value),
                              bn.running_mean, bn.running_var, kBatchNormEps);
    }
    h = activate(h, layer.spec.activation, slope_);
  }
  return h;
}

Tensor Mlp::infer(const Tensor& input) const {
  if (input.cols() != in_dim_) {
    throw ShapeError(name_ + ": input " + shape_str(input) + " but expected width " +
                     std::to_string(in_dim_));
  }
  Tensor h = input;
  for (const DenseLayer& layer : layers_) {
    Tensor a;
    a.noalias() = h * layer.weight.value;
    a.rowwise() += layer.bias.value.row(0);
    if (layer.bn) {
      const BatchNormParams& bn = *layer.bn;
      RowVector inv_std = (bn.running_var.array() + kBatchNormEps).rsqrt().matrix();
      a = (((a.rowwise() - bn.running_mean).array().rowwise() * inv_std.array()).rowwise() *
           bn.gamma.value.row(0).array())
              .rowwise() +
          bn.beta.value.row(0).array();
    }
    switch (layer.spec.activation) {
      case Activation::leaky_relu: {
        const double s = slope_;
        a = a.unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
        break;
      }
      case Activation::sigmoid:
        a = a.unaryExpr([](double v) {
          if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
          const double e = std::exp(v);
          return e / (1.0 + e);
        });
        break;
      case Activation::linear:
        break;
    }
    h = std::move(a);
  }
  require_finite(h, name_ + " output");
  return h;
}

std::vector<ad::Parameter*> Mlp::parameters() {
  std::vector<ad::Parameter*> out;
  for (DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
    if (l.bn) {
      out.push_back(&l.bn->gamma);
      out.push_back(&l.bn->beta);
    }
  }
  return out;
}

std::vector<const ad::Parameter*> Mlp::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
    if (l.bn) {
      out.push_back(&l.bn->gamma);
      out.push_back(&l.bn->beta);
    }
  }
  return out;
}

Tensor init_truncated_normal(Eigen::Index rows, Eigen::Index cols, double mu, double sigma,
                             Rng& rng) {
  if (rows <= 0 || cols <= 0) throw ShapeError("init_truncated_normal: invalid shape");
  if (!(sigma > 0.0)) throw std::invalid_argument("init_truncated_normal: sigma must be positive");
  std::normal_distribution<double> normal(mu, sigma);
  Tensor out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double v;
    do {
      v = normal(rng);
    } while (std::abs(v - mu) > 2.0 * sigma);
    out.data()[i] = v;
  }
  return out;
}

Tensor init_truncated_normal(Eigen::Index rows, Eigen::Index cols, double mu, double sigma,
                             std::uint64_t seed) {
  Rng rng(seed);
  return init_truncated_normal(rows, cols, mu, sigma, rng);
}

void init_weights(Mlp& mlp, double sigma, Rng& rng) {
  for (DenseLayer& l : mlp.layers()) {
    l.weight.value = init_truncated_normal(l.weight.value.rows(), l.weight.value.cols(), 0.0, sigma, rng);
    l.bias.value.setZero();
    if (l.bn) {
      l.bn->gamma.value.setOnes();
      l.bn->beta.value.setZero();
      l.bn->running_mean.setZero();
      l.bn->running_var.setOnes();
    }
  }
}

void init_fan_in(Mlp& mlp, double gain, Rng& rng) {
  for (DenseLayer& l : mlp.layers()) {
    const double fan_in = static_cast<double>(l.weight.value.rows());
    l.weight.value = init_truncated_normal(l.weight.value.rows(), l.weight.value.cols(), 0.0,
                                           std::sqrt(gain / fan_in), rng);
    l.bias.value.setZero();
  }
}

}  // namespace fden

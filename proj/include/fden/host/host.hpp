// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fden/core/mlp.hpp"
#include "fden/data/shapes.hpp"
#include "fden/host/container.hpp"

namespace fden::host {

struct HostConfig {
  int dim = 32;
  int steps = 5000;
  int batch = 64;
  double lr = 1e-3;
  double leaky_slope = 0.01;
};

/// The fixed pretrained encoder/decoder FDEN attaches to.
///
/// Encoder 256 -> 128 -> 64 -> dim (linear head); decoder mirrors it and ends
/// in a sigmoid. Once frozen, the parameters are rounded to float32 and
/// every mutable accessor throws.
class HostModel {
 public:
  HostModel() = default;
  HostModel(int dim, double leaky_slope, int in_dim = data::kPixels);

  Tensor encode(const Tensor& x) const;
  Tensor decode(const Tensor& z) const;
  /// Decoder on a trace with constant weights, for gradients into z.
  ad::Var decode_trace(ad::Tape& tape, ad::Var z) const;

  void freeze();
  bool frozen() const { return frozen_; }

  /// SHA-256 over every parameter at float32 precision.
  std::string checksum() const;

  int dim() const { return dim_; }
  int in_dim() const { return in_dim_; }
  double leaky_slope() const { return encoder_.leaky_slope(); }

  Mlp& mutable_encoder();
  Mlp& mutable_decoder();
  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }

 private:
  int dim_ = 0;
  int in_dim_ = 0;
  bool frozen_ = false;
  Mlp encoder_;
  Mlp decoder_;
};

/// Mean over pixels of the squared reconstruction error.
double reconstruction_error(const Tensor& x, const Tensor& x_hat);

/// Trains on every image with per-pixel squared error and Adam, then rescales
/// the code to zero mean and unit variance per unit (the decoder absorbs the
/// inverse map). Returns the model frozen.
/// Throws NumericError naming the step if the loss diverges.
HostModel train_host(const data::ShapeDataset& ds, const HostConfig& config, std::uint64_t seed);

io::Container to_container(const HostModel& host);
HostModel host_from_container(const io::Container& c);
void save_checkpoint(const HostModel& host, const std::filesystem::path& path);
HostModel load_host_checkpoint(const std::filesystem::path& path);

}  // namespace fden::host

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fden/core/mlp.hpp"
#include "fden/host/container.hpp"

namespace fden::model {

/// Hidden widths of every sub-network. Defaults are the full-size model;
/// tests shrink them.
struct FdenWidths {
  std::vector<int> global_decoder = {512, 512, 512};
  std::vector<int> local_decoder = {512, 512};
  std::vector<int> stream = {256, 256};
  std::vector<int> global_encoder = {512, 512, 512};
  std::vector<int> statnet = {1024, 256, 64};
  std::vector<int> head = {512, 256, 64};

  /// Every hidden layer `w` wide.
  static FdenWidths uniform(int w);
};

struct FdenArch {
  int dim = 32;
  /// Class count per supervised factor f_1..f_N; f_0 has no head.
  std::vector<int> classes = {3, 3, 2, 2};
  double dropout = 0.2;
  double leaky_slope = 0.01;
  FdenWidths widths;

  int n_factors() const { return static_cast<int>(classes.size()); }
};

/// f_0 .. f_N, each [batch, dim].
struct FactorSet {
  std::vector<Tensor> factors;

  std::size_t count() const { return factors.size(); }
  Eigen::Index batch() const { return factors.empty() ? 0 : factors.front().rows(); }
  Tensor& operator[](std::size_t i) { return factors.at(i); }
  const Tensor& operator[](std::size_t i) const { return factors.at(i); }
  /// Rows `first .. first+count` of every factor.
  FactorSet rows(Eigen::Index first, Eigen::Index count) const;
  /// f_0 | f_1 | ... | f_N along columns.
  Tensor concat() const;
};

/// Decomposer, Entangler, statisticians network and alignment heads.
///
///   decompose: z -> D_dec -> [z_dec] -> D_i -> f_i       (i = 0..N)
///   entangle:  f_i -> E_i, concat -> E_enc -> z~
///   statnet:   (f_0 | .. | f_N) -> scalar critic
///   heads:     f_i -> logits over attribute i          (i = 1..N)
class FdenModel {
 public:
  FdenModel() = default;
  /// All weights zero; call initialize() for the random start.
  explicit FdenModel(FdenArch arch);

  /// Truncated normal (mean 0) weights, zero biases, fresh batch norm.
  void initialize(double sigma, std::uint64_t seed);

  FactorSet decompose(const Tensor& z) const;
  Tensor entangle(const FactorSet& fs) const;
  Tensor head_logits(int factor, const Tensor& f) const;
  /// Index of the most likely class per row.
  Labels predict(int factor, const Tensor& f) const;

  std::vector<ad::Var> decompose(ad::Tape& tape, ad::Var z, Mode mode, Rng* rng);
  ad::Var entangle(ad::Tape& tape, const std::vector<ad::Var>& factors, Mode mode, Rng* rng);
  ad::Var head(ad::Tape& tape, int factor, ad::Var f, Mode mode, Rng* rng);
  ad::Var statnet(ad::Tape& tape, ad::Var input, Mode mode, Rng* rng);

  std::vector<ad::Parameter*> decomposer_parameters();
  std::vector<ad::Parameter*> entangler_parameters();
  std::vector<ad::Parameter*> statnet_parameters();
  std::vector<ad::Parameter*> head_parameters();
  std::vector<ad::Parameter*> parameters();

  std::vector<const Mlp*> networks() const;
  std::vector<Mlp*> networks();

  /// SHA-256 over architecture, parameters and batch-norm statistics at float32.
  std::string checksum() const;
  /// Rounds every stored value to float32, as a checkpoint round trip would.
  void round_to_f32();

  const FdenArch& arch() const { return arch_; }
  int dim() const { return arch_.dim; }
  int n_factors() const { return arch_.n_factors(); }

  const Mlp& global_decoder() const { return global_decoder_; }
  const Mlp& local_decoder(int i) const { return local_decoders_.at(i); }
  const Mlp& stream(int i) const { return streams_.at(i); }
  const Mlp& global_encoder() const { return global_encoder_; }
  const Mlp& statnet_network() const { return statnet_; }
  const Mlp& head_network(int factor) const;

 private:
  void check_factors(std::size_t count, Eigen::Index cols) const;

  FdenArch arch_;
  Mlp global_decoder_;
  std::vector<Mlp> local_decoders_;
  std::vector<Mlp> streams_;
  Mlp global_encoder_;
  Mlp statnet_;
  std::vector<Mlp> heads_;
};

io::Container to_container(const FdenModel& model);
FdenModel fden_from_container(const io::Container& c);
void save_checkpoint(const FdenModel& model, const std::filesystem::path& path);
FdenModel load_fden_checkpoint(const std::filesystem::path& path);

}  // namespace fden::model

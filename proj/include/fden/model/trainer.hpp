// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "fden/core/optim.hpp"
#include "fden/data/sampling.hpp"
#include "fden/host/latent.hpp"
#include "fden/model/losses.hpp"

namespace fden::model {

struct TrainConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
  double lambda = 0.5;
  AdamConfig adam;
  int batch = 16;
  std::int64_t steps = 30000;
  std::uint64_t seed = 7;
  bool grl = true;
  bool factorizer = true;
  MarginalMode marginal = MarginalMode::one_vs_all;
  /// Without the reversal layer: steps before this one ascend L_M everywhere,
  /// later steps descend it.
  std::int64_t phase_switch = 20000;

  /// Throws std::invalid_argument on negative weights or batch < 2.
  void validate() const;
};

struct StepMetrics {
  std::int64_t step = 0;  // 1-based
  double loss_total = 0.0;
  double loss_r = 0.0;
  double loss_c = 0.0;
  double loss_m = 0.0;
  double grad_norm_u = 0.0;
  double grad_norm_m = 0.0;
  int phase = 0;
};

/// Dropout streams, one per sub-network.
struct DropoutStreams {
  Rng decomposer, entangler, heads, statnet;
  explicit DropoutStreams(std::uint64_t seed);
};

struct Objectives {
  ad::Var loss_r;
  std::optional<ad::Var> loss_c;
  std::optional<ad::Var> loss_m;
};

/// Forward pass of every loss term on `tape` for one batch. The reversal layer
/// sits in front of the statisticians network when `config.grl` is set.
/// `x` (the host inputs) enables the lambda term; it needs `host`.
Objectives build_objectives(ad::Tape& tape, FdenModel& model, const host::HostModel* host,
                            const Tensor& z, const Tensor* x, const std::vector<Labels>& labels,
                            const TrainConfig& config, const TcPlan* plan, DropoutStreams& rng);

/// Decomposer gradients of one step, before the optimizer. The applied
/// gradient g_u + clip(g_u, g_m) is left in Parameter::grad.
struct StepGradients {
  StepMetrics metrics;
  std::vector<Tensor> g_u;  // from alpha L_R + beta L_C
  std::vector<Tensor> g_m;  // from the L_M pass, reversal included
};

class Trainer {
 public:
  /// `pool` lists the rows of `data` used for training. Labels are read in
  /// the order stored in `data`, one attribute per head.
  Trainer(FdenModel& model, const host::HostModel* host, const host::LatentDataset& data,
          std::vector<std::size_t> pool, TrainConfig config);

  /// Draws the next batch and runs one optimizer step.
  StepMetrics step();
  StepMetrics train_step(const std::vector<std::size_t>& rows);
  /// Fills Parameter::grad for every FDEN parameter (clipped on the decomposer)
  /// without stepping. Uses `plan` when given, else draws one.
  StepGradients compute_gradients(const std::vector<std::size_t>& rows, const TcPlan* plan = nullptr);

  std::int64_t steps_done() const { return adam_.steps(); }
  /// 1 before the switch and 2 after it without the reversal layer; 0 with it.
  int phase_for(std::int64_t step) const;
  const TrainConfig& config() const { return config_; }

 private:
  FdenModel& model_;
  const host::HostModel* host_;
  const host::LatentDataset& data_;
  TrainConfig config_;
  data::BatchSampler sampler_;
  DropoutStreams dropout_;
  Rng shuffle_;
  Adam adam_;
  std::vector<ad::Parameter*> theta_;
  bool use_x_ = false;
};

using StepCallback = std::function<void(const StepMetrics&)>;

/// Runs config.steps optimizer steps and returns the per-step curve.
std::vector<StepMetrics> train(FdenModel& model, const host::HostModel* host,
                               const host::LatentDataset& data, const std::vector<std::size_t>& pool,
                               const TrainConfig& config, const StepCallback& on_step = {});

/// Header `step,loss_total,loss_r,loss_c,loss_m,grad_norm_u,grad_norm_m`, one row per step.
void write_curves_csv(const std::vector<StepMetrics>& curve, const std::filesystem::path& path);
std::vector<StepMetrics> read_curves_csv(const std::filesystem::path& path);

/// Trailing moving average over `window` entries.
std::vector<double> smooth(const std::vector<double>& v, std::size_t window);

}  // namespace fden::model

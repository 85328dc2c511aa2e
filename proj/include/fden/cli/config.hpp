// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fden/host/host.hpp"
#include "fden/metrics/analysis.hpp"
#include "fden/metrics/mi.hpp"
#include "fden/metrics/scores.hpp"
#include "fden/model/fden.hpp"
#include "fden/model/trainer.hpp"

namespace fden::cli {

/// Bad key, value or combination. `line` is 0 when not tied to a file line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

/// Every tunable of a run, as one flat key = value namespace.
struct ExperimentConfig {
  int dim = 32;
  int n_factors = 4;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
  double lambda = 0.5;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch = 16;
  std::int64_t steps = 30000;
  std::int64_t seed = 7;
  bool grl = true;
  bool factorizer = true;
  model::MarginalMode marginal_mode = model::MarginalMode::one_vs_all;
  double leaky_slope = 0.01;
  double init_sigma = 0.001;
  double dropout = 0.2;

  std::int64_t phase_switch = 20000;
  int host_steps = 5000;
  int host_batch = 64;
  double host_lr = 1e-3;
  double test_fraction = 0.2;
  int mi_samples = 10000;
  int mi_steps = 5000;
  int mi_batch = 512;
  double mi_lr = 1e-3;
  int bins = 20;
  int train_votes = 10000;
  int eval_votes = 5000;
  int vote_batch = 64;
  int episodes = 1000;
  int ways = 3;
  int shots = 1;
  int fewshot_factor = 1;
  std::vector<int> fewshot_classes = {0, 4, 8};

  bool operator==(const ExperimentConfig&) const = default;

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  host::HostConfig host() const;
  model::FdenArch arch() const;
  model::TrainConfig train() const;
  metrics::MiEstimatorConfig mi() const;
  metrics::VoteConfig votes() const;
  metrics::EpisodeConfig episode() const;
};

/// Keys in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws ConfigError (with `line`) for an
/// unknown key or a value of the wrong type. Does not validate ranges.
void set_value(ExperimentConfig& c, const std::string& key, const std::string& value, int line = 0);
std::string get_value(const ExperimentConfig& c, const std::string& key);

/// `key = value` lines, `#` starts a comment. Later lines win. The result is validated.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig parse_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every key, one `key = value` line each, in config_keys() order.
std::string serialize(const ExperimentConfig& c);

/// SHA-256 of serialize(c).
std::string config_digest(const ExperimentConfig& c);

}  // namespace fden::cli

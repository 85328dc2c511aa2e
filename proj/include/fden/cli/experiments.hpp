// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fden/cli/config.hpp"
#include "fden/cli/run_dir.hpp"
#include "fden/data/shapes.hpp"
#include "fden/host/host.hpp"
#include "fden/model/fden.hpp"

namespace fden::cli {

/// Train/test rows of the shapes dataset for this config.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> dataset_split(const data::ShapeDataset& ds,
                                                                            const ExperimentConfig& c);

/// Reconstruction through the frozen decoder, held-out head accuracy,
/// MIG/FVM/BVM/DCI on raw z and on factor-mean codes, factor independence
/// and factor-swap outcomes.
std::vector<ScoreRow> disentanglement_scores(const model::FdenModel& fden, const host::HostModel& host,
                                             const data::ShapeDataset& ds, const ExperimentConfig& c);

/// Prototype-matching accuracy on the configured factor and on raw z, over
/// held-out rows of the configured identity classes.
std::vector<ScoreRow> fewshot_scores(const model::FdenModel& fden, const host::HostModel& host,
                                     const data::ShapeDataset& ds, const ExperimentConfig& c);

/// DV estimate on a correlated Gaussian pair against the closed form.
std::vector<ScoreRow> mi_bench_scores(double rho, const ExperimentConfig& c);

/// Final and smoothed curve summaries, host checksum agreement.
std::vector<ScoreRow> training_scores(const std::vector<model::StepMetrics>& curve, bool host_unchanged);

/// Looks up `metric` in a score file's rows. Throws std::out_of_range if absent.
double score_value(const std::vector<ScoreLine>& rows, const std::string& metric);

}  // namespace fden::cli

// SPDX-License-Identifier: Apache-2.0
#include "fden/cli/experiments.hpp"

#include <algorithm>
#include <stdexcept>

#include "fden/host/latent.hpp"
#include "fden/metrics/analysis.hpp"
#include "fden/metrics/mi.hpp"
#include "fden/metrics/scores.hpp"
#include "fden/model/manipulate.hpp"
#include "fden/data/sampling.hpp"

namespace fden::cli {
namespace {

std::size_t curve_window(std::size_t steps) { return std::clamp<std::size_t>(steps / 20, 1, 500); }

std::vector<Labels> generative_factors(const data::ShapeDataset& ds) {
  std::vector<Labels> out(4);
  for (const auto& f : ds.factor_indices()) {
    for (int k = 0; k < 4; ++k) out[k].push_back(f[k]);
  }
  return out;
}

// Mean over units of each factor, one column per factor.
Tensor factor_means(const model::FactorSet& fs) {
  Tensor t(fs.batch(), static_cast<Eigen::Index>(fs.count()));
  for (std::size_t i = 0; i < fs.count(); ++i) t.col(static_cast<Eigen::Index>(i)) = fs[i].rowwise().mean();
  return t;
}

void code_scores(std::vector<ScoreRow>& rows, const std::string& tag, const metrics::CodeFactorMatrix& cf,
                 const ExperimentConfig& c) {
  const std::size_t n = cf.codes.rows();
  rows.push_back({"mig_" + tag, metrics::mig(cf, c.bins), n});
  metrics::VoteConfig votes = c.votes();
  rows.push_back({"factor_vae_" + tag, metrics::factor_vae_metric(cf, votes), static_cast<std::size_t>(votes.eval_votes)});
  rows.push_back({"beta_vae_" + tag, metrics::beta_vae_metric(cf, votes), static_cast<std::size_t>(votes.eval_votes)});
  const auto d = metrics::dci(cf, c.bins);
  rows.push_back({"dci_disentanglement_" + tag, d.disentanglement, n});
  rows.push_back({"dci_completeness_" + tag, d.completeness, n});
  rows.push_back({"dci_informativeness_" + tag, d.informativeness, n});
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> dataset_split(const data::ShapeDataset& ds,
                                                                            const ExperimentConfig& c) {
  return data::split_indices(ds.size(), c.test_fraction, static_cast<std::uint64_t>(c.seed));
}

std::vector<ScoreRow> disentanglement_scores(const model::FdenModel& fden, const host::HostModel& host,
                                             const data::ShapeDataset& ds, const ExperimentConfig& c) {
  const auto [train_rows, test_rows] = dataset_split(ds, c);
  const Tensor z = host.encode(ds.images);
  const model::FactorSet fs = fden.decompose(z);
  const Tensor z_tilde = fden.entangle(fs);
  const std::size_t n = ds.size();
  std::vector<ScoreRow> rows;

  const double host_err = host::reconstruction_error(ds.images, host.decode(z));
  const double fden_err = host::reconstruction_error(ds.images, host.decode(z_tilde));
  rows.push_back({"recon_error_host", host_err, n});
  rows.push_back({"recon_error_fden", fden_err, n});
  rows.push_back({"recon_ratio", fden_err / host_err, n});

  for (int i = 1; i <= fden.n_factors(); ++i) {
    const Labels& truth = ds.attributes[static_cast<std::size_t>(i - 1)];
    const Labels pred = fden.predict(i, fs[static_cast<std::size_t>(i)]);
    const auto acc = [&](const std::vector<std::size_t>& idx) {
      std::size_t ok = 0;
      for (auto r : idx) ok += pred[r] == truth[r];
      return idx.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(idx.size());
    };
    const std::string name = data::kAttributeNames[static_cast<std::size_t>(i - 1)];
    rows.push_back({"head_acc_test_" + name, acc(test_rows), test_rows.size()});
    rows.push_back({"head_acc_train_" + name, acc(train_rows), train_rows.size()});
  }

  const auto gt = generative_factors(ds);
  code_scores(rows, "z", metrics::CodeFactorMatrix{z, gt}, c);
  const Tensor means = factor_means(fs);
  code_scores(rows, "fden", metrics::CodeFactorMatrix{means, gt}, c);

  // Independence: factor-mean codes pairwise, against the per-unit MI of
  // each supervised factor with its own attribute.
  std::vector<Labels> binned;
  for (Eigen::Index k = 0; k < means.cols(); ++k) binned.push_back(metrics::discretize_column(means.col(k), c.bins));
  double pair_max = 0.0, pair_sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < binned.size(); ++i) {
    for (std::size_t j = i + 1; j < binned.size(); ++j) {
      const double mi = metrics::discrete_mi(binned[i], binned[j]);
      pair_max = std::max(pair_max, mi);
      pair_sum += mi;
      ++pairs;
    }
  }
  double unit_sum = 0.0;
  for (int i = 1; i <= fden.n_factors(); ++i) {
    const Tensor& f = fs[static_cast<std::size_t>(i)];
    const Labels& attr = ds.attributes[static_cast<std::size_t>(i - 1)];
    double s = 0.0;
    for (Eigen::Index u = 0; u < f.cols(); ++u) s += metrics::discrete_mi(metrics::discretize_column(f.col(u), c.bins), attr);
    unit_sum += s / static_cast<double>(f.cols());
  }
  const double unit_mean = unit_sum / fden.n_factors();
  rows.push_back({"factor_pair_mi_max", pair_max, n});
  rows.push_back({"factor_pair_mi_mean", pairs ? pair_sum / pairs : 0.0, n});
  rows.push_back({"aligned_unit_mi_mean", unit_mean, n});
  rows.push_back({"factor_pair_mi_max_over_aligned", unit_mean > 0 ? pair_max / unit_mean : 0.0, n});

  constexpr int kSwapPairs = 200;
  const auto swap = model::swap_semantics(fden, host, ds, 1, kSwapPairs, static_cast<std::uint64_t>(c.seed));
  rows.push_back({"swap_shape_changed", swap.changed / static_cast<double>(swap.pairs), kSwapPairs});
  rows.push_back({"swap_shape_matched", swap.matched / static_cast<double>(swap.pairs), kSwapPairs});
  rows.push_back({"swap_position_preserved", swap.preserved / static_cast<double>(swap.pairs), kSwapPairs});
  rows.push_back({"swap_position_violated", (swap.pairs - swap.preserved) / static_cast<double>(swap.pairs), kSwapPairs});
  return rows;
}

std::vector<ScoreRow> fewshot_scores(const model::FdenModel& fden, const host::HostModel& host,
                                     const data::ShapeDataset& ds, const ExperimentConfig& c) {
  if (c.fewshot_factor > fden.n_factors()) throw std::invalid_argument("fewshot_factor exceeds the model's factors");
  metrics::EpisodeConfig e = c.episode();
  e.candidates = dataset_split(ds, c).second;
  const auto n = static_cast<std::size_t>(e.episodes);
  const std::string f = "f" + std::to_string(c.fewshot_factor);
  std::vector<ScoreRow> rows;
  rows.push_back({"fewshot_acc_" + f, metrics::episodic_eval(fden, host, ds, c.fewshot_factor, e), n});
  rows.push_back({"fewshot_acc_z", metrics::episodic_eval(host.encode(ds.images), ds.identity, e), n});
  rows.push_back({"fewshot_chance", 1.0 / e.ways, n});
  return rows;
}

std::vector<ScoreRow> mi_bench_scores(double rho, const ExperimentConfig& c) {
  const auto n = static_cast<std::size_t>(c.mi_samples);
  const Tensor xy = data::sample_gaussian_pair(rho, n, static_cast<std::uint64_t>(c.seed));
  const auto est = metrics::dv_mi_estimate(xy.col(0), xy.col(1), c.mi());
  const double truth = metrics::analytic_gaussian_mi(rho);
  return {{"rho", rho, n},
          {"dv_estimate", est.value, n},
          {"analytic_mi", truth, n},
          {"abs_error", std::abs(est.value - truth), n}};
}

std::vector<ScoreRow> training_scores(const std::vector<model::StepMetrics>& curve, bool host_unchanged) {
  const std::size_t n = curve.size();
  std::vector<double> lm;
  lm.reserve(n);
  for (const auto& s : curve) lm.push_back(s.loss_m);
  const auto sm = model::smooth(lm, curve_window(n));
  const auto top = std::max_element(sm.begin(), sm.end());
  const double peak = sm.empty() ? 0.0 : *top;
  const double last = sm.empty() ? 0.0 : sm.back();
  const double first = sm.empty() ? 0.0 : sm.front();
  const auto tail = curve.empty() ? model::StepMetrics{} : curve.back();
  return {{"host_checksum_unchanged", host_unchanged ? 1.0 : 0.0, 1},
          {"final_loss_total", tail.loss_total, n},
          {"final_loss_r", tail.loss_r, n},
          {"final_loss_c", tail.loss_c, n},
          {"final_loss_m", tail.loss_m, n},
          {"smoothed_loss_m_window", static_cast<double>(curve_window(n)), n},
          {"smoothed_loss_m_first", first, n},
          {"smoothed_loss_m_max", peak, n},
          {"smoothed_loss_m_argmax", sm.empty() ? 0.0 : static_cast<double>(top - sm.begin() + 1), n},
          {"smoothed_loss_m_final", last, n},
          {"smoothed_loss_m_final_over_max", peak > 0 ? last / peak : 0.0, n}};
}

double score_value(const std::vector<ScoreLine>& rows, const std::string& metric) {
  for (const auto& r : rows) {
    if (r.metric == metric) return std::stod(r.value);
  }
  throw std::out_of_range("no score named " + metric);
}

}  // namespace fden::cli

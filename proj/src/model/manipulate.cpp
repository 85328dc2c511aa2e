// SPDX-License-Identifier: Apache-2.0
#include "fden/model/manipulate.hpp"

#include <random>
#include <stdexcept>

#include "fden/core/rng.hpp"

namespace fden::model {

FactorSet factor_interpolate(const FactorSet& a, const FactorSet& b, double alpha,
                             const std::vector<bool>& mask) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("interpolation weight must lie in [0, 1]");
  if (a.count() != b.count() || mask.size() != a.count()) {
    throw ShapeError("factor_interpolate: factor counts differ");
  }
  FactorSet out = a;
  for (std::size_t i = 0; i < a.count(); ++i) {
    require_same_shape(a[i], b[i], "factor_interpolate");
    if (mask[i]) out[i] = alpha * a[i] + (1.0 - alpha) * b[i];
  }
  return out;
}

std::pair<FactorSet, FactorSet> factor_swap(const FactorSet& a, const FactorSet& b, int factor) {
  const auto k = static_cast<std::size_t>(factor);
  if (factor < 0 || k >= a.count() || a.count() != b.count()) throw std::out_of_range("factor_swap: bad factor index");
  require_same_shape(a[k], b[k], "factor_swap");
  std::pair<FactorSet, FactorSet> out{a, b};
  out.first[k] = b[k];
  out.second[k] = a[k];
  return out;
}

FactorSet factor_transfer_mean(const FactorSet& all, const Labels& labels, std::size_t index,
                               int factor, int target) {
  const auto k = static_cast<std::size_t>(factor);
  if (factor < 0 || k >= all.count()) throw std::out_of_range("factor_transfer_mean: bad factor index");
  if (labels.size() != static_cast<std::size_t>(all.batch())) throw ShapeError("factor_transfer_mean: label count mismatch");
  if (index >= labels.size()) throw std::out_of_range("factor_transfer_mean: sample index out of range");
  RowVector sum = RowVector::Zero(all[k].cols());
  std::size_t n = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] != target) continue;
    sum += all[k].row(static_cast<Eigen::Index>(r));
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no sample carries attribute value " + std::to_string(target));
  FactorSet out = all.rows(static_cast<Eigen::Index>(index), 1);
  out[k] = sum / static_cast<double>(n);
  return out;
}

FactorSet factor_transfer_mean(const FdenModel& model, const host::LatentDataset& latents,
                               std::size_t index, int factor, int target) {
  if (factor < 1 || factor > model.n_factors()) throw std::out_of_range("factor_transfer_mean: factor has no attribute");
  if (latents.labels.size() < static_cast<std::size_t>(factor)) throw std::invalid_argument("dataset lacks the attribute labels");
  return factor_transfer_mean(model.decompose(latents.z), latents.labels[static_cast<std::size_t>(factor - 1)].second,
                              index, factor, target);
}

SwapOutcome swap_semantics(const FdenModel& model, const host::HostModel& host, const data::ShapeDataset& ds,
                           int factor, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw std::invalid_argument("swap_semantics: need at least one pair");
  if (factor < 0 || factor > model.n_factors()) throw std::out_of_range("swap_semantics: bad factor index");
  if (ds.size() < 2) throw std::invalid_argument("swap_semantics: dataset too small");
  const auto& shape = ds.attributes[data::kShape];
  const FactorSet all = model.decompose(host.encode(ds.images));
  Rng rng = make_stream(seed, "swap.pairs");
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> a(pairs), b(pairs);
  for (int p = 0; p < pairs; ++p) {
    a[p] = pick(rng);
    do b[p] = pick(rng);
    while (shape[b[p]] == shape[a[p]]);
  }
  FactorSet mixed;
  for (std::size_t k = 0; k < all.count(); ++k) {
    Tensor t(pairs, all[k].cols());
    const auto& src = static_cast<int>(k) == factor ? b : a;
    for (int p = 0; p < pairs; ++p) t.row(p) = all[k].row(static_cast<Eigen::Index>(src[p]));
    mixed.factors.push_back(std::move(t));
  }
  const Tensor img = host.decode(model.entangle(mixed));
  SwapOutcome out;
  out.pairs = pairs;
  for (int p = 0; p < pairs; ++p) {
    const std::size_t near = data::nearest_image(ds, img.row(p));
    if (shape[near] != shape[a[p]]) ++out.changed;
    if (shape[near] == shape[b[p]]) ++out.matched;
    const auto& px = ds.attributes[data::kPosXBin];
    const auto& py = ds.attributes[data::kPosYBin];
    if (px[near] == px[a[p]] && py[near] == py[a[p]]) ++out.preserved;
  }
  return out;
}

}  // namespace fden::model

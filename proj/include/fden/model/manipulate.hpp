// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fden/host/latent.hpp"
#include "fden/model/fden.hpp"

namespace fden::model {

/// Selected factors become alpha * A + (1 - alpha) * B; the rest come from A.
/// `mask` has one entry per factor.
FactorSet factor_interpolate(const FactorSet& a, const FactorSet& b, double alpha,
                             const std::vector<bool>& mask);

/// Factor `factor` of every row swapped between `a` and `b`.
std::pair<FactorSet, FactorSet> factor_swap(const FactorSet& a, const FactorSet& b, int factor);

/// Decomposition of sample `index` with factor i replaced by the mean of
/// factor i over every sample whose attribute-i label is `target`. Attribute i
/// is the (i-1)-th label set of `latents`.
FactorSet factor_transfer_mean(const FdenModel& model, const host::LatentDataset& latents,
                               std::size_t index, int factor, int target);

/// Same, from precomputed factors of the whole dataset.
FactorSet factor_transfer_mean(const FactorSet& all, const Labels& labels, std::size_t index,
                               int factor, int target);

struct SwapOutcome {
  int pairs = 0;
  int changed = 0;    // nearest image's shape differs from the first sample's
  int matched = 0;    // ... and equals the second sample's
  int preserved = 0;  // nearest image keeps both position bins of the first sample
};

/// Draws `pairs` random pairs with different shapes, hands factor `factor` of
/// the second sample to the first, decodes the result through `host` and
/// judges it by its nearest dataset image.
SwapOutcome swap_semantics(const FdenModel& model, const host::HostModel& host, const data::ShapeDataset& ds,
                           int factor, int pairs, std::uint64_t seed);

}  // namespace fden::model

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fden/data/shapes.hpp"
#include "fden/host/container.hpp"
#include "fden/host/host.hpp"

namespace fden::host {

/// Representations z (and optionally the inputs x they came from) with
/// per-sample attribute labels. Labels keep insertion order.
struct LatentDataset {
  Tensor z;
  std::optional<Tensor> x;
  std::vector<std::pair<std::string, Labels>> labels;

  std::size_t size() const { return static_cast<std::size_t>(z.rows()); }
  int dim() const { return static_cast<int>(z.cols()); }
  const Labels& label(const std::string& name) const;
  /// Throws FormatError when row counts disagree.
  void validate() const;
};

/// Encodes every image and attaches the four alignment attributes.
LatentDataset encode_dataset(const HostModel& host, const data::ShapeDataset& ds);

io::Container to_container(const LatentDataset& latents);
/// Entries `z`, optional `x`, and `labels_<attr>`; other entries are ignored.
LatentDataset latents_from_container(const io::Container& c);

void export_representations(const LatentDataset& latents, const std::filesystem::path& path);
LatentDataset import_representations(const std::filesystem::path& path);

}  // namespace fden::host

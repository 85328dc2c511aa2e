// SPDX-License-Identifier: Apache-2.0
#include "fden/host/latent.hpp"

namespace fden::host {

const Labels& LatentDataset::label(const std::string& name) const {
  for (const auto& [n, l] : labels)
    if (n == name) return l;
  throw std::out_of_range("no labels for attribute " + name);
}

void LatentDataset::validate() const {
  if (z.rows() == 0 || z.cols() == 0) throw FormatError("representation z is empty");
  if (x && x->rows() != z.rows()) {
    throw FormatError("row-count mismatch: z has " + std::to_string(z.rows()) + " rows, x has " +
                      std::to_string(x->rows()));
  }
  for (const auto& [n, l] : labels) {
    if (static_cast<Eigen::Index>(l.size()) != z.rows()) {
      throw FormatError("row-count mismatch: labels_" + n + " has " + std::to_string(l.size()) + " rows, z has " +
                        std::to_string(z.rows()));
    }
  }
}

LatentDataset encode_dataset(const HostModel& host, const data::ShapeDataset& ds) {
  LatentDataset out;
  out.z = host.encode(ds.images);
  out.x = ds.images;
  for (int a = 0; a < data::kNumAttributes; ++a) {
    out.labels.emplace_back(data::kAttributeNames[static_cast<std::size_t>(a)], ds.attributes[static_cast<std::size_t>(a)]);
  }
  return out;
}

io::Container to_container(const LatentDataset& latents) {
  latents.validate();
  io::Container c;
  c.add_tensor("z", latents.z);
  if (latents.x) c.add_tensor("x", *latents.x);
  for (const auto& [n, l] : latents.labels) c.add_labels("labels_" + n, l);
  return c;
}

LatentDataset latents_from_container(const io::Container& c) {
  LatentDataset out;
  if (c.at("z").dims.size() != 2) throw FormatError("entry z must have rank 2");
  out.z = c.tensor("z");
  if (c.contains("x")) {
    if (c.at("x").dims.size() != 2) throw FormatError("entry x must have rank 2");
    out.x = c.tensor("x");
  }
  for (const auto& e : c.entries()) {
    if (e.name.rfind("labels_", 0) == 0) out.labels.emplace_back(e.name.substr(7), c.labels(e.name));
  }
  out.validate();
  return out;
}

void export_representations(const LatentDataset& latents, const std::filesystem::path& path) {
  io::write_file(to_container(latents), path);
}

LatentDataset import_representations(const std::filesystem::path& path) {
  return latents_from_container(io::read_file(path));
}

}  // namespace fden::host

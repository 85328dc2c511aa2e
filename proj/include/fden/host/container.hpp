// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fden/core/mlp.hpp"
#include "fden/core/tensor.hpp"

namespace fden::io {

/// Binary container shared by checkpoints and representation files.
///
///   "FDEN" u8(version = 1) u32(entry count)
///   per entry: u32(name length) name u32(rank) u32[rank] dims f32[prod(dims)]
///
/// All integers and floats little-endian.
inline constexpr char kMagic[4] = {'F', 'D', 'E', 'N'};
inline constexpr std::uint8_t kVersion = 1;

struct Entry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t count() const;
};

class Container {
 public:
  void add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data);
  /// Stores a 2-D tensor (rank 2) at float32 precision.
  void add_tensor(std::string name, const Tensor& t);
  void add_vector(std::string name, const RowVector& v);
  void add_labels(std::string name, const Labels& labels);
  void add_scalar(std::string name, double v);

  bool contains(std::string_view name) const;
  const Entry& at(std::string_view name) const;
  /// Entry as [rows, cols]; rank-1 entries become a single row.
  Tensor tensor(std::string_view name) const;
  Labels labels(std::string_view name) const;
  double scalar(std::string_view name) const;
  /// Scalar widened through its shortest float32 decimal form, so a stored
  /// 0.01 reads back as the double 0.01.
  double decimal(std::string_view name) const;

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

std::string encode(const Container& c);
/// Throws FormatError on bad magic, unknown version, truncation, or trailing bytes.
Container decode(std::string_view bytes);

void write_file(const Container& c, const std::filesystem::path& path);
Container read_file(const std::filesystem::path& path);

/// Adds every parameter and batch-norm statistic of `mlp` under its own name prefix.
void store_mlp(Container& c, const Mlp& mlp);
/// Loads into an already-shaped `mlp`; every entry must exist with matching dims.
void load_mlp(const Container& c, Mlp& mlp);

}  // namespace fden::io

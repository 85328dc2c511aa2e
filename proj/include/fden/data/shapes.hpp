// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fden/core/tensor.hpp"

namespace fden::data {

enum class Shape : int { square = 0, cross = 1, diamond = 2 };

inline constexpr int kCanvas = 16;
inline constexpr int kPixels = kCanvas * kCanvas;
inline constexpr std::array<int, 3> kScales = {3, 5, 7};
inline constexpr int kPositions = 10;

struct ShapeFactors {
  Shape shape = Shape::square;
  int scale = 3;  // box side in pixels
  int pos_x = 0;  // column of the box's left edge
  int pos_y = 0;  // row of the box's top edge

  bool operator==(const ShapeFactors&) const = default;
};

std::string shape_name(Shape s);

/// Throws std::invalid_argument when the box leaves the canvas or the scale
/// is not odd and positive.
void validate(const ShapeFactors& f);

/// 16x16 binary image, pixel (row, col) at [row, col].
Tensor render_shape(const ShapeFactors& f);

/// Attribute columns used as alignment targets, in factor order.
enum Attribute : int { kShape = 0, kScale = 1, kPosXBin = 2, kPosYBin = 3 };
inline constexpr int kNumAttributes = 4;
inline constexpr std::array<int, kNumAttributes> kAttributeClasses = {3, 3, 2, 2};
inline constexpr std::array<const char*, kNumAttributes> kAttributeNames = {"shape", "scale", "pos_x_bin",
                                                                          "pos_y_bin"};

int position_bin(int pos);
int scale_index(int scale);

struct DatasetSpec {
  std::vector<Shape> shapes = {Shape::square, Shape::cross, Shape::diamond};
  std::vector<int> scales = {3, 5, 7};
  int positions = kPositions;
};

struct ShapeDataset {
  Tensor images;                       // [n, 256], flattened row-major
  std::vector<ShapeFactors> factors;   // per image
  std::array<Labels, kNumAttributes> attributes;
  Labels identity;                     // shape x scale class, 0..8

  std::size_t size() const { return factors.size(); }
  /// Rows selected by `index`.
  Tensor rows(const std::vector<std::size_t>& index) const;
  /// Ground-truth factors as integer indices (shape, scale index, pos_x, pos_y).
  std::vector<std::array<int, 4>> factor_indices() const;
};

/// Full factorial grid in lexicographic (shape, scale, pos_x, pos_y) order.
/// The grid is exhaustive, so the seed does not influence the contents.
ShapeDataset make_dataset(const DatasetSpec& spec = {}, std::uint64_t seed = 0);

/// Row of the dataset image closest to `image` in squared error; ties go to
/// the lowest row.
std::size_t nearest_image(const ShapeDataset& ds, const RowVector& image);

/// CSV rows `idx,shape,scale,pos_x,pos_y,pix_0..pix_255`; shape as its index.
void write_csv(const ShapeDataset& ds, std::ostream& out);

/// Seeded split of 0..n-1 into (train, test) with round(n * test_fraction) test rows,
/// each list sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double test_fraction,
                                                                            std::uint64_t seed);

}  // namespace fden::data

// SPDX-License-Identifier: Apache-2.0
#include "fden/data/shapes.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fden/core/rng.hpp"

namespace fden::data {

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::square:
      return "square";
    case Shape::cross:
      return "cross";
    case Shape::diamond:
      return "diamond";
  }
  return "unknown";
}

void validate(const ShapeFactors& f) {
  const int k = static_cast<int>(f.shape);
  if (k < 0 || k > 2) throw std::invalid_argument("unknown shape");
  if (f.scale <= 0 || f.scale % 2 == 0) throw std::invalid_argument("scale must be odd and positive");
  if (f.pos_x < 0 || f.pos_y < 0 || f.pos_x + f.scale > kCanvas || f.pos_y + f.scale > kCanvas) {
    throw std::invalid_argument("shape box leaves the canvas");
  }
}

Tensor render_shape(const ShapeFactors& f) {
  validate(f);
  Tensor img = Tensor::Zero(kCanvas, kCanvas);
  const int c = (f.scale - 1) / 2;
  for (int i = 0; i < f.scale; ++i) {
    for (int j = 0; j < f.scale; ++j) {
      bool lit = false;
      switch (f.shape) {
        case Shape::square:
          lit = true;
          break;
        case Shape::diamond:
          lit = std::abs(i - c) + std::abs(j - c) <= c;
          break;
        case Shape::cross:
          // Diagonal cross; an upright plus coincides with the 3-pixel diamond.
          lit = i == j || i + j == f.scale - 1;
          break;
      }
      if (lit) img(f.pos_y + i, f.pos_x + j) = 1.0;
    }
  }
  return img;
}

int position_bin(int pos) { return pos >= kPositions / 2 ? 1 : 0; }

int scale_index(int scale) {
  for (std::size_t i = 0; i < kScales.size(); ++i) {
    if (kScales[i] == scale) return static_cast<int>(i);
  }
  throw std::invalid_argument("scale " + std::to_string(scale) + " not in the grid");
}

Tensor ShapeDataset::rows(const std::vector<std::size_t>& index) const {
  Tensor out(static_cast<Eigen::Index>(index.size()), images.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = images.row(static_cast<Eigen::Index>(index[i]));
  }
  return out;
}

std::vector<std::array<int, 4>> ShapeDataset::factor_indices() const {
  std::vector<std::array<int, 4>> out;
  out.reserve(factors.size());
  for (const auto& f : factors) {
    out.push_back({static_cast<int>(f.shape), scale_index(f.scale), f.pos_x, f.pos_y});
  }
  return out;
}

ShapeDataset make_dataset(const DatasetSpec& spec, std::uint64_t /*seed*/) {
  ShapeDataset ds;
  const std::size_t n = spec.shapes.size() * spec.scales.size() * static_cast<std::size_t>(spec.positions) *
                        static_cast<std::size_t>(spec.positions);
  ds.images.resize(static_cast<Eigen::Index>(n), kPixels);
  Eigen::Index row = 0;
  for (Shape s : spec.shapes) {
    for (int sc : spec.scales) {
      for (int x = 0; x < spec.positions; ++x) {
        for (int y = 0; y < spec.positions; ++y) {
          ShapeFactors f{s, sc, x, y};
          Tensor img = render_shape(f);
          ds.images.row(row++) = Eigen::Map<const RowVector>(img.data(), kPixels);
          ds.factors.push_back(f);
          ds.attributes[kShape].push_back(static_cast<int>(s));
          ds.attributes[kScale].push_back(scale_index(sc));
          ds.attributes[kPosXBin].push_back(position_bin(x));
          ds.attributes[kPosYBin].push_back(position_bin(y));
          ds.identity.push_back(static_cast<int>(s) * static_cast<int>(kScales.size()) + scale_index(sc));
        }
      }
    }
  }
  return ds;
}

void write_csv(const ShapeDataset& ds, std::ostream& out) {
  out << "idx,shape,scale,pos_x,pos_y";
  for (int p = 0; p < kPixels; ++p) out << ",pix_" << p;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& f = ds.factors[i];
    out << i << ',' << static_cast<int>(f.shape) << ',' << f.scale << ',' << f.pos_x << ',' << f.pos_y;
    for (int p = 0; p < kPixels; ++p) out << ',' << static_cast<int>(ds.images(static_cast<Eigen::Index>(i), p));
    out << '\n';
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double test_fraction,
                                                                            std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw std::invalid_argument("test fraction must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_stream(seed, "split");
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * test_fraction + 0.5);
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

std::size_t nearest_image(const ShapeDataset& ds, const RowVector& image) {
  if (image.cols() != ds.images.cols()) throw ShapeError("nearest_image: pixel count mismatch");
  if (ds.size() == 0) throw std::invalid_argument("nearest_image: empty dataset");
  Eigen::Index best = 0;
  (ds.images.rowwise() - image).rowwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

}  // namespace fden::data

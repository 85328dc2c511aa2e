// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fden/data/sampling.hpp"
#include "fden/data/shapes.hpp"

namespace fden::data {
namespace {

int lit(const Tensor& t) { return static_cast<int>(t.sum()); }

// Oracle: count box-relative pixels satisfying each rasterization rule.
int enumerate_lit(Shape s, int scale) {
  const int c = (scale - 1) / 2;
  int n = 0;
  for (int i = 0; i < scale; ++i)
    for (int j = 0; j < scale; ++j) {
      if (s == Shape::square) ++n;
      if (s == Shape::diamond && std::abs(i - c) + std::abs(j - c) <= c) ++n;
      if (s == Shape::cross && (i == j || i + j == scale - 1)) ++n;
    }
  return n;
}

TEST(RenderShape, SquareAtOrigin) {
  Tensor img = render_shape({Shape::square, 3, 0, 0});
  EXPECT_EQ(lit(img), 9);
  EXPECT_EQ(img.block(0, 0, 3, 3).sum(), 9.0);
}

TEST(RenderShape, SmallDiamondAndCrossHaveFivePixels) {
  EXPECT_EQ(enumerate_lit(Shape::diamond, 3), 5);
  EXPECT_EQ(enumerate_lit(Shape::cross, 3), 5);
  for (int x : {0, 4, 13}) {
    EXPECT_EQ(lit(render_shape({Shape::diamond, 3, x, 2})), 5);
    EXPECT_EQ(lit(render_shape({Shape::cross, 3, 1, x})), 5);
  }
}

TEST(RenderShape, OutOfCanvasThrows) {
  EXPECT_THROW(render_shape({Shape::square, 7, 10, 0}), std::invalid_argument);
  EXPECT_THROW(render_shape({Shape::square, 4, 0, 0}), std::invalid_argument);
  EXPECT_THROW(render_shape({Shape::cross, 3, -1, 0}), std::invalid_argument);
}

TEST(Dataset, GridSizeAndPixelCounts) {
  ShapeDataset ds = make_dataset();
  ASSERT_EQ(ds.size(), 900u);
  EXPECT_EQ(ds.images.rows(), 900);
  EXPECT_EQ(ds.images.cols(), 256);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& f = ds.factors[i];
    EXPECT_EQ(static_cast<int>(ds.images.row(static_cast<Eigen::Index>(i)).sum()), enumerate_lit(f.shape, f.scale));
  }
  // Lexicographic order: last factor varies fastest.
  EXPECT_EQ(ds.factors[1], (ShapeFactors{Shape::square, 3, 0, 1}));
  EXPECT_EQ(ds.factors[899], (ShapeFactors{Shape::diamond, 7, 9, 9}));
}

TEST(Dataset, BinaryAndBijective) {
  ShapeDataset ds = make_dataset();
  EXPECT_TRUE((ds.images.array() == 0.0 || ds.images.array() == 1.0).all());
  for (Eigen::Index i = 0; i < ds.images.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < ds.images.rows(); ++j) {
      ASSERT_NE(ds.images.row(i), ds.images.row(j)) << i << " vs " << j;
    }
  }
}

TEST(Dataset, DeterministicAndLabels) {
  ShapeDataset a = make_dataset({}, 1);
  ShapeDataset b = make_dataset({}, 1);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(position_bin(7), 1);
  EXPECT_EQ(position_bin(4), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.attributes[kPosXBin][i], position_bin(a.factors[i].pos_x));
    EXPECT_EQ(a.identity[i], a.attributes[kShape][i] * 3 + a.attributes[kScale][i]);
  }
}

TEST(Dataset, CsvLayout) {
  ShapeDataset ds = make_dataset();
  std::ostringstream os;
  write_csv(ds, os);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header.substr(0, 28), "idx,shape,scale,pos_x,pos_y,");
  EXPECT_NE(header.find("pix_255"), std::string::npos);
  EXPECT_EQ(first.substr(0, 12), "0,0,3,0,0,1,");
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 260);
  int lines = 0;
  std::string l;
  while (std::getline(is, l)) ++lines;
  EXPECT_EQ(lines, 899);
}

TEST(Split, DisjointCoverAndDeterministic) {
  auto [tr, te] = split_indices(900, 0.2, 4);
  EXPECT_EQ(te.size(), 180u);
  EXPECT_EQ(tr.size(), 720u);
  std::set<std::size_t> all(tr.begin(), tr.end());
  all.insert(te.begin(), te.end());
  EXPECT_EQ(all.size(), 900u);
  EXPECT_EQ(split_indices(900, 0.2, 4).second, te);
}

double corr(const Tensor& s) {
  const double mx = s.col(0).mean(), my = s.col(1).mean();
  const auto dx = s.col(0).array() - mx;
  const auto dy = s.col(1).array() - my;
  return (dx * dy).sum() / std::sqrt(dx.square().sum() * dy.square().sum());
}

TEST(GaussianPair, EmpiricalCorrelation) {
  EXPECT_NEAR(corr(sample_gaussian_pair(0.0, 100000, 3)), 0.0, 0.01);
  EXPECT_NEAR(corr(sample_gaussian_pair(0.9, 100000, 3)), 0.9, 0.01);
  EXPECT_EQ(sample_gaussian_pair(0.5, 100, 9), sample_gaussian_pair(0.5, 100, 9));
  EXPECT_THROW(sample_gaussian_pair(1.0, 10, 1), std::invalid_argument);
}

TEST(Episode, StructuralContract) {
  ShapeDataset ds = make_dataset();
  std::vector<int> pool = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  Episode ep = make_episode(ds.identity, 3, 1, pool, 12);
  ASSERT_EQ(ep.support.size(), 3u);
  std::set<int> classes;
  for (const auto& s : ep.support) {
    classes.insert(s.label);
    EXPECT_EQ(ds.identity[s.index], s.label);
    EXPECT_NE(s.index, ep.query.index);
  }
  EXPECT_EQ(classes.size(), 3u);
  EXPECT_TRUE(classes.count(ep.query.label));
  EXPECT_EQ(ds.identity[ep.query.index], ep.query.label);
}

TEST(Episode, DeterministicPerSeed) {
  ShapeDataset ds = make_dataset();
  std::vector<int> pool = {0, 4, 8};
  Episode a = make_episode(ds.identity, 3, 5, pool, 77);
  Episode b = make_episode(ds.identity, 3, 5, pool, 77);
  ASSERT_EQ(a.support.size(), b.support.size());
  for (std::size_t i = 0; i < a.support.size(); ++i) EXPECT_EQ(a.support[i].index, b.support[i].index);
  EXPECT_EQ(a.query.index, b.query.index);
}

TEST(Episode, InsufficientSamplesOrClassesThrow) {
  Labels labels = {0, 0, 1, 1, 2, 2};
  EXPECT_THROW(make_episode(labels, 2, 2, {0, 1, 2}, 1), EpisodeError);
  EXPECT_THROW(make_episode(labels, 4, 1, {0, 1, 2}, 1), EpisodeError);
  EXPECT_NO_THROW(make_episode(labels, 3, 1, {0, 1, 2}, 1));
}

TEST(Episode, CoversEveryPoolClass) {
  ShapeDataset ds = make_dataset();
  std::vector<int> pool = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::set<int> seen_support, seen_query;
  for (int e = 0; e < 1000; ++e) {
    Episode ep = make_episode(ds.identity, 3, 1, pool, static_cast<std::uint64_t>(e));
    for (const auto& s : ep.support) seen_support.insert(s.label);
    seen_query.insert(ep.query.label);
  }
  EXPECT_EQ(seen_support.size(), 9u);
  EXPECT_EQ(seen_query.size(), 9u);
}

}  // namespace
}  // namespace fden::data

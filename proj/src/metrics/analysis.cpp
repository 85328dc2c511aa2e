// SPDX-License-Identifier: Apache-2.0
#include "fden/metrics/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <stdexcept>

#include "fden/core/rng.hpp"
#include "fden/data/sampling.hpp"

namespace fden::metrics {

Tensor rsa_matrix(const Tensor& units) {
  if (units.rows() < 2) throw std::invalid_argument("rsa_matrix: need at least two samples");
  const Eigen::Index m = units.cols();
  Tensor centered = units.rowwise() - units.colwise().mean();
  const RowVector norms = centered.colwise().norm();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(norms[j] > 1e-12 * std::max(1.0, units.col(j).cwiseAbs().maxCoeff()))) {
      throw std::invalid_argument("rsa_matrix: column " + std::to_string(j) + " has zero variance");
    }
    centered.col(j) /= norms[j];
  }
  Tensor r = centered.transpose() * centered;
  for (Eigen::Index i = 0; i < m; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = std::clamp(r(i, j), -1.0, 1.0);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

std::vector<std::string> rsa_labels(int dim, int factors) {
  std::vector<std::string> out;
  for (int j = 0; j < dim; ++j) out.push_back("z_" + std::to_string(j));
  for (int f = 0; f < factors; ++f) {
    for (int j = 0; j < dim; ++j) out.push_back("f" + std::to_string(f) + "_" + std::to_string(j));
  }
  return out;
}

Tensor rsa_units(const Tensor& z, const model::FactorSet& fs) {
  if (fs.count() == 0) return z;
  if (fs.batch() != z.rows()) throw ShapeError("rsa_units: factor rows differ from code rows");
  Tensor out(z.rows(), z.cols() + static_cast<Eigen::Index>(fs.count()) * fs.factors.front().cols());
  out << z, fs.concat();
  return out;
}

void write_matrix_csv(const Tensor& m, const std::vector<std::string>& labels, std::ostream& out) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != labels.size()) {
    throw ShapeError("write_matrix_csv: matrix must be square with one label per row");
  }
  char buf[32];
  out << "unit";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

double episodic_eval(const Tensor& vectors, const Labels& labels, const EpisodeConfig& config) {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size()) {
    throw ShapeError("episodic_eval: " + std::to_string(vectors.rows()) + " vectors for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (config.episodes < 1) throw data::EpisodeError("episode count must be positive");
  std::vector<int> pool = config.class_pool;
  if (pool.empty()) {
    pool = labels;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }
  std::vector<std::size_t> candidates = config.candidates;
  if (candidates.empty()) {
    candidates.resize(labels.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  }
  Rng seeds = make_stream(config.seed, "episodes");
  int hits = 0;
  for (int e = 0; e < config.episodes; ++e) {
    const data::Episode ep = data::make_episode(labels, candidates, config.ways, config.shots, pool, seeds());
    Tensor protos = Tensor::Zero(ep.ways, vectors.cols());
    std::vector<int> classes;
    for (std::size_t s = 0; s < ep.support.size(); ++s) {
      const data::EpisodeItem& item = ep.support[s];
      auto it = std::find(classes.begin(), classes.end(), item.label);
      if (it == classes.end()) {
        classes.push_back(item.label);
        it = classes.end() - 1;
      }
      protos.row(it - classes.begin()) += vectors.row(static_cast<Eigen::Index>(item.index));
    }
    protos /= static_cast<double>(ep.shots);
    Eigen::Index best = 0;
    (protos.rowwise() - vectors.row(static_cast<Eigen::Index>(ep.query.index))).rowwise().squaredNorm().minCoeff(&best);
    hits += classes[static_cast<std::size_t>(best)] == ep.query.label;
  }
  return static_cast<double>(hits) / static_cast<double>(config.episodes);
}

double episodic_eval(const model::FdenModel& fden, const host::HostModel& host,
                     const data::ShapeDataset& ds, int factor, const EpisodeConfig& config) {
  const model::FactorSet fs = fden.decompose(host.encode(ds.images));
  if (factor < 0 || static_cast<std::size_t>(factor) >= fs.count()) {
    throw std::out_of_range("episodic_eval: factor " + std::to_string(factor) + " does not exist");
  }
  return episodic_eval(fs[static_cast<std::size_t>(factor)], ds.identity, config);
}

}  // namespace fden::metrics

// SPDX-License-Identifier: Apache-2.0
#include "fden/core/tensor.hpp"

#include <cmath>

namespace fden {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + ", " + std::to_string(t.cols()) + "]";
}

void require_finite(const Tensor& t, std::string_view what) {
  if (!t.allFinite()) {
    throw NumericError("non-finite value in " + std::string(what));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape " + shape_str(a) + " vs " + shape_str(b));
  }
}

double global_norm(const std::vector<Tensor>& ts) {
  double s = 0.0;
  for (const auto& t : ts) s += t.squaredNorm();
  return std::sqrt(s);
}

}  // namespace fden

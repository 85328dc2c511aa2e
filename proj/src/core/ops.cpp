// SPDX-License-Identifier: Apache-2.0
#include "fden/core/ops.hpp"

#include <algorithm>
#include <cmath>

namespace fden::ad {

namespace {

Tape& tape_of(Var a) { return *a.tape; }

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("vars recorded on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + shape_str(av) + " x " + shape_str(bv));
  }
  Tensor out;
  out.noalias() = av * bv;
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) {
      Tensor ga;
      ga.noalias() = g * t.value(ib).transpose();
      t.accumulate(ia, std::move(ga));
    }
    if (t.requires_grad(ib)) {
      if (Tensor* pg = t.param_grad(ib)) {
        pg->noalias() += t.value(ia).transpose() * g;
      } else {
        Tensor gb;
        gb.noalias() = t.value(ia).transpose() * g;
        t.accumulate(ib, std::move(gb));
      }
    }
  });
}

Var add_bias(Var a, Var bias) {
  same_tape(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_bias: " + shape_str(av) + " + " + shape_str(bv));
  }
  Tensor out = av.rowwise() + bv.row(0);
  const auto ia = a.id, ib = bias.id;
  return tape_of(a).record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value() + b.value();
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value() - b.value();
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, -g);
  });
}

Var scale(Var a, double c) {
  Tensor out = a.value() * c;
  const auto ia = a.id;
  return tape_of(a).record(std::move(out), {ia},
                           [ia, c](Tape& t, const Tensor& g) { t.accumulate(ia, g * c); });
}

Var mul_constant(Var a, const Tensor& mask) {
  require_same_shape(a.value(), mask, "mul_constant");
  Tensor out = a.value().cwiseProduct(mask);
  const auto ia = a.id;
  return tape_of(a).record(std::move(out), {ia}, [ia, mask](Tape& t, const Tensor& g) {
    t.accumulate(ia, g.cwiseProduct(mask));
  });
}

Var square(Var a) {
  Tensor out = a.value().array().square().matrix();
  const auto ia = a.id;
  return tape_of(a).record(std::move(out), {ia}, [ia](Tape& t, const Tensor& g) {
    t.accumulate(ia, (2.0 * g.array() * t.value(ia).array()).matrix());
  });
}

Var leaky_relu(Var a, double slope) {
  const Tensor& x = a.value();
  Tensor out = x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  const auto ia = a.id;
  return tape_of(a).record(std::move(out), {ia}, [ia, slope](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(ia);
    Tensor d = g.binaryExpr(xv, [slope](double gv, double v) { return v > 0.0 ? gv : slope * gv; });
    t.accumulate(ia, d);
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value().unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  const auto ia = a.id;
  Tensor y = out;
  return tape_of(a).record(std::move(out), {ia}, [ia, y = std::move(y)](Tape& t, const Tensor& g) {
    t.accumulate(ia, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var grad_reverse(Var a, double constant) {
  const auto ia = a.id;
  return tape_of(a).record(a.value(), {ia}, [ia, constant](Tape& t, const Tensor& g) {
    t.accumulate(ia, -constant * g);
  });
}

Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean,
                     RowVector* batch_var) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  const Eigen::Index n = xv.rows();
  if (gamma.value().cols() != xv.cols() || beta.value().cols() != xv.cols()) {
    throw ShapeError("batch_norm: feature width mismatch " + shape_str(xv));
  }
  RowVector mean = xv.colwise().mean();
  Tensor centered = xv.rowwise() - mean;
  RowVector var = centered.array().square().colwise().mean().matrix();
  RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Tensor xhat = centered.array().rowwise() * inv_std.array();
  Tensor out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  const auto ix = x.id, ig = gamma.id, ib = beta.id;
  return tape_of(x).record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), inv_std, n](Tape& t, const Tensor& g) {
        if (t.requires_grad(ig)) t.accumulate(ig, (g.array() * xhat.array()).colwise().sum().matrix());
        if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
        if (t.requires_grad(ix)) {
          const RowVector gam = t.value(ig).row(0);
          Tensor gxhat = g.array().rowwise() * gam.array();
          RowVector sum_g = gxhat.colwise().sum();
          RowVector sum_gx = (gxhat.array() * xhat.array()).colwise().sum().matrix();
          const double inv_n = 1.0 / static_cast<double>(n);
          Tensor dx = ((gxhat.rowwise() - sum_g * inv_n).array() -
                       xhat.array().rowwise() * (sum_gx.array() * inv_n))
                          .rowwise() *
                      inv_std.array();
          t.accumulate(ix, dx);
        }
      });
}

Var batch_norm_eval(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                    double eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  if (mean.cols() != xv.cols() || var.cols() != xv.cols()) {
    throw ShapeError("batch_norm: running statistics width mismatch " + shape_str(xv));
  }
  RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Tensor xhat = (xv.rowwise() - mean).array().rowwise() * inv_std.array();
  Tensor out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  const auto ix = x.id, ig = gamma.id, ib = beta.id;
  return tape_of(x).record(std::move(out), {ix, ig, ib},
                           [ix, ig, ib, xhat = std::move(xhat), inv_std](Tape& t, const Tensor& g) {
                             if (t.requires_grad(ig))
                               t.accumulate(ig, (g.array() * xhat.array()).colwise().sum().matrix());
                             if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
                             if (t.requires_grad(ix)) {
                               const RowVector gam = t.value(ig).row(0);
                               t.accumulate(ix, (g.array().rowwise() *
                                                 (gam.array() * inv_std.array()))
                                                    .matrix());
                             }
                           });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  return tape_of(parts.front()).record(std::move(out), ids, [ids, widths](Tape& t, const Tensor& g) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) t.accumulate(ids[k], g.middleCols(off, widths[k]));
      off += widths[k];
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> heights;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    ids.push_back(p.id);
    heights.push_back(p.rows());
  }
  return tape_of(parts.front()).record(std::move(out), ids, [ids, heights](Tape& t, const Tensor& g) {
    Eigen::Index off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) t.accumulate(ids[k], g.middleRows(off, heights[k]));
      off += heights[k];
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index width) {
  const Tensor& av = a.value();
  if (start < 0 || width < 0 || start + width > av.cols()) {
    throw ShapeError("slice_cols out of range on " + shape_str(av));
  }
  Tensor out = av.middleCols(start, width);
  const auto ia = a.id;
  const Eigen::Index total = av.cols();
  return tape_of(a).record(std::move(out), {ia}, [ia, start, width, total](Tape& t, const Tensor& g) {
    Tensor full = Tensor::Zero(g.rows(), total);
    full.middleCols(start, width) = g;
    t.accumulate(ia, std::move(full));
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  const Tensor& av = a.value();
  if (start < 0 || count < 0 || start + count > av.rows()) {
    throw ShapeError("slice_rows out of range on " + shape_str(av));
  }
  Tensor out = av.middleRows(start, count);
  const auto ia = a.id;
  const Eigen::Index total = av.rows();
  return tape_of(a).record(std::move(out), {ia}, [ia, start, count, total](Tape& t, const Tensor& g) {
    Tensor full = Tensor::Zero(total, g.cols());
    full.middleRows(start, count) = g;
    t.accumulate(ia, std::move(full));
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& index) {
  const Tensor& av = a.value();
  Tensor out(static_cast<Eigen::Index>(index.size()), av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= static_cast<std::size_t>(av.rows())) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = av.row(static_cast<Eigen::Index>(index[i]));
  }
  const auto ia = a.id;
  const Eigen::Index rows = av.rows();
  return tape_of(a).record(std::move(out), {ia}, [ia, index, rows](Tape& t, const Tensor& g) {
    Tensor full = Tensor::Zero(rows, g.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
      full.row(static_cast<Eigen::Index>(index[i])) += g.row(static_cast<Eigen::Index>(i));
    }
    t.accumulate(ia, std::move(full));
  });
}

Var sum_all(Var a) {
  Tensor out = Tensor::Constant(1, 1, a.value().sum());
  const auto ia = a.id;
  const Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(out), {ia}, [ia, r, c](Tape& t, const Tensor& g) {
    t.accumulate(ia, Tensor::Constant(r, c, g(0, 0)));
  });
}

Var mean_all(Var a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  if (r * c == 0) throw ShapeError("mean_all of empty tensor");
  const double inv = 1.0 / static_cast<double>(r * c);
  Tensor out = Tensor::Constant(1, 1, a.value().sum() * inv);
  const auto ia = a.id;
  return tape_of(a).record(std::move(out), {ia}, [ia, r, c, inv](Tape& t, const Tensor& g) {
    t.accumulate(ia, Tensor::Constant(r, c, g(0, 0) * inv));
  });
}

Var mean_row_sq_dist(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mean_row_sq_dist");
  const Eigen::Index n = a.rows();
  if (n == 0) throw ShapeError("mean_row_sq_dist of empty batch");
  Tensor diff = a.value() - b.value();
  Tensor out = Tensor::Constant(1, 1, diff.squaredNorm() / static_cast<double>(n));
  const auto ia = a.id, ib = b.id;
  return tape_of(a).record(std::move(out), {ia, ib}, [ia, ib, diff = std::move(diff), n](Tape& t, const Tensor& g) {
    const double k = 2.0 * g(0, 0) / static_cast<double>(n);
    if (t.requires_grad(ia)) t.accumulate(ia, diff * k);
    if (t.requires_grad(ib)) t.accumulate(ib, diff * (-k));
  });
}

Var log_mean_exp(Var a) {
  const Tensor& av = a.value();
  const Eigen::Index r = av.rows(), c = av.cols();
  if (r * c == 0) throw ShapeError("log_mean_exp of empty tensor");
  const double m = av.maxCoeff();
  Tensor e = (av.array() - m).exp().matrix();
  const double s = e.sum();
  const double val = m + std::log(s / static_cast<double>(r * c));
  const auto ia = a.id;
  return tape_of(a).record(Tensor::Constant(1, 1, val), {ia},
                           [ia, w = Tensor(e / s)](Tape& t, const Tensor& g) {
                             t.accumulate(ia, w * g(0, 0));
                           });
}

Var softmax_cross_entropy(Var logits, const Labels& labels) {
  const Tensor& z = logits.value();
  const Eigen::Index n = z.rows(), k = z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  Tensor prob(n, k);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw std::out_of_range("label " + std::to_string(y) + " out of range");
    const double m = z.row(i).maxCoeff();
    RowVector e = (z.row(i).array() - m).exp().matrix();
    const double s = e.sum();
    prob.row(i) = e / s;
    loss += -(z(i, y) - m - std::log(s));
  }
  loss /= static_cast<double>(n);
  const auto ia = logits.id;
  return tape_of(logits).record(Tensor::Constant(1, 1, loss), {ia},
                                [ia, prob = std::move(prob), labels, n](Tape& t, const Tensor& g) {
                                  Tensor d = prob;
                                  for (Eigen::Index i = 0; i < n; ++i) d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
                                  t.accumulate(ia, d * (g(0, 0) / static_cast<double>(n)));
                                });
}

}  // namespace fden::ad

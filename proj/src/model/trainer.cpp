// SPDX-License-Identifier: Apache-2.0
#include "fden/model/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fden::model {

void TrainConfig::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0 || lambda < 0) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (batch < 2) throw std::invalid_argument("batch size must be at least 2");
  if (steps < 0) throw std::invalid_argument("step count must be nonnegative");
  if (adam.lr < 0 || adam.beta1 < 0 || adam.beta1 >= 1 || adam.beta2 < 0 || adam.beta2 >= 1) {
    throw std::invalid_argument("invalid Adam hyperparameters");
  }
}

DropoutStreams::DropoutStreams(std::uint64_t seed)
    : decomposer(make_stream(seed, "dropout.decomposer")),
      entangler(make_stream(seed, "dropout.entangler")),
      heads(make_stream(seed, "dropout.heads")),
      statnet(make_stream(seed, "dropout.statnet")) {}

Objectives build_objectives(ad::Tape& tape, FdenModel& model, const host::HostModel* host,
                            const Tensor& z, const Tensor* x, const std::vector<Labels>& labels,
                            const TrainConfig& config, const TcPlan* plan, DropoutStreams& rng) {
  Objectives out;
  ad::Var zv = tape.constant_ref(z);
  std::vector<ad::Var> fs = model.decompose(tape, zv, Mode::train, &rng.decomposer);
  ad::Var zt = model.entangle(tape, fs, Mode::train, &rng.entangler);
  if (x != nullptr && config.lambda > 0.0) {
    if (host == nullptr) throw std::invalid_argument("the input-space term needs the host decoder");
    out.loss_r = loss_lr(zv, zt, tape.constant_ref(*x), host->decode_trace(tape, zt), config.lambda);
  } else {
    out.loss_r = loss_lr(zv, zt, std::nullopt, std::nullopt, 0.0);
  }
  if (!config.factorizer) return out;

  const int n = model.n_factors();
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("need one label set per alignment head");
  }
  std::vector<ad::Var> logits;
  std::vector<const Labels*> ls;
  for (int i = 1; i <= n; ++i) {
    logits.push_back(model.head(tape, i, fs[static_cast<std::size_t>(i)], Mode::train, &rng.heads));
    ls.push_back(&labels[static_cast<std::size_t>(i - 1)]);
  }
  out.loss_c = loss_lc(logits, ls);

  if (plan == nullptr) throw std::invalid_argument("the statistics term needs a shuffle plan");
  ad::Var input = tc_stat_input(fs, *plan);
  if (config.grl) input = ad::grad_reverse(input);
  ad::Var t = model.statnet(tape, input, Mode::train, &rng.statnet);
  const Eigen::Index b = z.rows();
  out.loss_m = loss_lm(ad::slice_rows(t, 0, b), ad::slice_rows(t, b, t.rows() - b));
  return out;
}

namespace {

Tensor gather(const Tensor& src, const std::vector<std::size_t>& rows) {
  Tensor out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

const TrainConfig& validated(const TrainConfig& c) {
  c.validate();
  return c;
}

}  // namespace

Trainer::Trainer(FdenModel& model, const host::HostModel* host, const host::LatentDataset& data,
                 std::vector<std::size_t> pool, TrainConfig config)
    : model_(model),
      host_(host),
      data_(data),
      config_(validated(config)),
      sampler_(std::move(pool), static_cast<std::size_t>(config.batch), config.seed),
      dropout_(config.seed),
      shuffle_(make_stream(config.seed, "shuffle")),
      adam_(model.parameters(), config.adam),
      theta_(model.decomposer_parameters()) {
  data_.validate();
  if (data_.dim() != model_.dim()) {
    throw ShapeError("latent width " + std::to_string(data_.dim()) + " does not match the model's " +
                     std::to_string(model_.dim()));
  }
  if (host_ != nullptr && !host_->frozen()) throw std::logic_error("the host must be frozen");
  if (config_.factorizer) {
    if (data_.labels.size() < static_cast<std::size_t>(model_.n_factors())) {
      throw std::invalid_argument("dataset carries fewer label sets than alignment heads");
    }
    for (int i = 0; i < model_.n_factors(); ++i) {
      for (int y : data_.labels[static_cast<std::size_t>(i)].second) {
        if (y < 0 || y >= model_.arch().classes[static_cast<std::size_t>(i)]) {
          throw std::out_of_range("label " + std::to_string(y) + " out of range for head " + std::to_string(i + 1));
        }
      }
    }
  }
  use_x_ = host_ != nullptr && data_.x.has_value() && config_.lambda > 0.0;
}

int Trainer::phase_for(std::int64_t step) const {
  if (config_.grl) return 0;
  return step <= config_.phase_switch ? 1 : 2;
}

StepGradients Trainer::compute_gradients(const std::vector<std::size_t>& rows, const TcPlan* plan) {
  StepGradients out;
  StepMetrics& m = out.metrics;
  m.step = adam_.steps() + 1;
  m.phase = phase_for(m.step);

  const Tensor z = gather(data_.z, rows);
  std::optional<Tensor> x;
  if (use_x_) x = gather(*data_.x, rows);
  std::vector<Labels> labels;
  std::optional<TcPlan> drawn;
  if (config_.factorizer) {
    for (int i = 0; i < model_.n_factors(); ++i) {
      const Labels& src = data_.labels[static_cast<std::size_t>(i)].second;
      Labels l;
      l.reserve(rows.size());
      for (std::size_t r : rows) l.push_back(src[r]);
      labels.push_back(std::move(l));
    }
    if (plan == nullptr) {
      drawn = make_tc_plan(rows.size(), model_.n_factors(), config_.marginal, shuffle_);
      plan = &*drawn;
    }
  }

  adam_.zero_grad();
  ad::Tape tape;
  Objectives obj = build_objectives(tape, model_, host_, z, x ? &*x : nullptr, labels, config_, plan, dropout_);
  ad::Var lu = ad::scale(obj.loss_r, config_.alpha);
  if (obj.loss_c) lu = ad::add(lu, ad::scale(*obj.loss_c, config_.beta));
  m.loss_r = obj.loss_r.value()(0, 0);
  m.loss_c = obj.loss_c ? obj.loss_c->value()(0, 0) : 0.0;
  m.loss_m = obj.loss_m ? obj.loss_m->value()(0, 0) : 0.0;

  const bool lm_pass = obj.loss_m && config_.gamma > 0.0;
  tape.backward(lu, 1.0, lm_pass);
  out.g_u.resize(theta_.size());
  out.g_m.resize(theta_.size());
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    std::swap(out.g_u[i], theta_[i]->grad);
    theta_[i]->zero_grad();
  }
  double seed = 0.0;
  if (lm_pass) {
    // Statnet descends seed * L_M; the reversal layer hands the decomposer the opposite sign.
    seed = (config_.grl || m.phase == 1) ? -config_.gamma : config_.gamma;
    tape.backward(*obj.loss_m, seed);
  }
  for (std::size_t i = 0; i < theta_.size(); ++i) std::swap(out.g_m[i], theta_[i]->grad);
  m.loss_total = lu.value()(0, 0) + seed * m.loss_m;
  m.grad_norm_u = global_norm(out.g_u);
  m.grad_norm_m = global_norm(out.g_m);
  if (!std::isfinite(m.grad_norm_u) || !std::isfinite(m.grad_norm_m)) {
    throw NumericError("non-finite decomposer gradient");
  }
  const double k = clip_factor(m.grad_norm_u, m.grad_norm_m);
  for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i]->grad = out.g_u[i] + k * out.g_m[i];
  return out;
}

StepMetrics Trainer::train_step(const std::vector<std::size_t>& rows) {
  const std::int64_t step = adam_.steps() + 1;
  try {
    StepGradients g = compute_gradients(rows);
    adam_.step();
    return g.metrics;
  } catch (const NumericError& e) {
    throw NumericError("training step " + std::to_string(step) + ": " + e.what());
  }
}

StepMetrics Trainer::step() { return train_step(sampler_.next()); }

std::vector<StepMetrics> train(FdenModel& model, const host::HostModel* host,
                               const host::LatentDataset& data, const std::vector<std::size_t>& pool,
                               const TrainConfig& config, const StepCallback& on_step) {
  Trainer trainer(model, host, data, pool, config);
  std::vector<StepMetrics> curve;
  curve.reserve(static_cast<std::size_t>(config.steps));
  for (std::int64_t s = 0; s < config.steps; ++s) {
    curve.push_back(trainer.step());
    if (on_step) on_step(curve.back());
  }
  return curve;
}

namespace {

constexpr const char* kCurveHeader = "step,loss_total,loss_r,loss_c,loss_m,grad_norm_u,grad_norm_m";

void put(std::string& line, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.push_back(',');
  line.append(buf, end);
}

}  // namespace

void write_curves_csv(const std::vector<StepMetrics>& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kCurveHeader << '\n';
  for (const StepMetrics& m : curve) {
    std::string line = std::to_string(m.step);
    for (double v : {m.loss_total, m.loss_r, m.loss_c, m.loss_m, m.grad_norm_u, m.grad_norm_m}) put(line, v);
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<StepMetrics> read_curves_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) throw FormatError(path.string() + ": bad curves header");
  std::vector<StepMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 7) throw FormatError(path.string() + ": bad curves row");
    StepMetrics m;
    m.step = static_cast<std::int64_t>(v[0]);
    m.loss_total = v[1];
    m.loss_r = v[2];
    m.loss_c = v[3];
    m.loss_m = v[4];
    m.grad_norm_u = v[5];
    m.grad_norm_m = v[6];
    out.push_back(m);
  }
  return out;
}

std::vector<double> smooth(const std::vector<double>& v, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smoothing window must be positive");
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= window) acc -= v[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace fden::model

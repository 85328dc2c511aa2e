// SPDX-License-Identifier: Apache-2.0
#include "fden/host/host.hpp"

#include <cmath>
#include <numeric>

#include "fden/core/digest.hpp"
#include "fden/core/optim.hpp"
#include "fden/data/sampling.hpp"

namespace fden::host {

HostModel::HostModel(int dim, double leaky_slope, int in_dim)
    : dim_(dim),
      in_dim_(in_dim),
      encoder_("host.encoder", in_dim,
               {{128, false, 0.0, Activation::leaky_relu},
                {64, false, 0.0, Activation::leaky_relu},
                {dim, false, 0.0, Activation::linear}},
               leaky_slope),
      decoder_("host.decoder", dim,
               {{64, false, 0.0, Activation::leaky_relu},
                {128, false, 0.0, Activation::leaky_relu},
                {in_dim, false, 0.0, Activation::sigmoid}},
               leaky_slope) {}

Tensor HostModel::encode(const Tensor& x) const { return encoder_.infer(x); }

Tensor HostModel::decode(const Tensor& z) const { return decoder_.infer(z); }

ad::Var HostModel::decode_trace(ad::Tape& tape, ad::Var z) const { return decoder_.forward_frozen(tape, z); }

void HostModel::freeze() {
  if (frozen_) return;
  for (Mlp* m : {&encoder_, &decoder_}) {
    for (ad::Parameter* p : m->parameters()) {
      round_to_f32(p->value);
      p->grad.resize(0, 0);
    }
  }
  frozen_ = true;
}

std::string HostModel::checksum() const {
  Sha256 h;
  h.update("host:" + std::to_string(dim_) + ":" + std::to_string(in_dim_));
  for (const Mlp* m : {&encoder_, &decoder_}) {
    for (const ad::Parameter* p : m->parameters()) h.update(p->name).update_f32(p->value);
  }
  return h.hex();
}

Mlp& HostModel::mutable_encoder() {
  if (frozen_) throw std::logic_error("host model is frozen");
  return encoder_;
}

Mlp& HostModel::mutable_decoder() {
  if (frozen_) throw std::logic_error("host model is frozen");
  return decoder_;
}

double reconstruction_error(const Tensor& x, const Tensor& x_hat) {
  require_same_shape(x, x_hat, "reconstruction_error");
  return (x - x_hat).squaredNorm() / static_cast<double>(x.size());
}

namespace {

// Rescales the code to zero mean and unit variance per unit over `x`,
// compensating in the decoder's first layer so reconstructions are unchanged.
void standardize_latent(HostModel& host, const Tensor& x) {
  const Tensor z = host.encode(x);
  const RowVector mu = z.colwise().mean();
  RowVector sd = ((z.rowwise() - mu).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 1e-8)) sd[j] = 1.0;
  }
  DenseLayer& out = host.mutable_encoder().layers().back();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    out.weight.value.col(j) /= sd[j];
    out.bias.value(0, j) = (out.bias.value(0, j) - mu[j]) / sd[j];
  }
  DenseLayer& in = host.mutable_decoder().layers().front();
  in.bias.value.row(0) += mu * in.weight.value;
  for (Eigen::Index j = 0; j < sd.size(); ++j) in.weight.value.row(j) *= sd[j];
}

}  // namespace

HostModel train_host(const data::ShapeDataset& ds, const HostConfig& config, std::uint64_t seed) {
  HostModel host(config.dim, config.leaky_slope, static_cast<int>(ds.images.cols()));
  if (config.steps > 0) {
    Rng init = make_stream(seed, "host.init");
    // Larger (He) scales leave most output pixels stuck dark under squared error.
    init_fan_in(host.mutable_encoder(), 0.2, init);
    init_fan_in(host.mutable_decoder(), 0.2, init);
    std::vector<ad::Parameter*> params = host.mutable_encoder().parameters();
    for (auto* p : host.mutable_decoder().parameters()) params.push_back(p);
    Adam opt(params, AdamConfig{config.lr, 0.9, 0.999, 1e-8});
    std::vector<std::size_t> pool(ds.size());
    std::iota(pool.begin(), pool.end(), 0);
    data::BatchSampler sampler(pool, static_cast<std::size_t>(config.batch), stream_seed(seed, "host.data"));
    const double per_pixel = 1.0 / static_cast<double>(ds.images.cols());
    for (int step = 0; step < config.steps; ++step) {
      Tensor x = ds.rows(sampler.next());
      opt.zero_grad();
      try {
        ad::Tape tape;
        ad::Var xv = tape.constant(x);
        ad::Var z = host.mutable_encoder().forward(tape, xv, Mode::train);
        ad::Var xh = host.mutable_decoder().forward(tape, z, Mode::train);
        ad::Var loss = ad::scale(ad::mean_row_sq_dist(xh, xv), per_pixel);
        tape.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("host training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      opt.step();
    }
    standardize_latent(host, ds.images);
  }
  host.freeze();
  return host;
}

io::Container to_container(const HostModel& host) {
  io::Container c;
  c.add_scalar("host.meta.dim", host.dim());
  c.add_scalar("host.meta.in_dim", host.in_dim());
  c.add_scalar("host.meta.leaky_slope", host.leaky_slope());
  io::store_mlp(c, host.encoder());
  io::store_mlp(c, host.decoder());
  return c;
}

HostModel host_from_container(const io::Container& c) {
  const double dim = c.scalar("host.meta.dim");
  const double in_dim = c.scalar("host.meta.in_dim");
  if (dim < 1 || in_dim < 1 || dim != std::floor(dim) || in_dim != std::floor(in_dim)) {
    throw FormatError("host checkpoint declares invalid dimensions");
  }
  HostModel host(static_cast<int>(dim), c.decimal("host.meta.leaky_slope"), static_cast<int>(in_dim));
  io::load_mlp(c, host.mutable_encoder());
  io::load_mlp(c, host.mutable_decoder());
  host.freeze();
  return host;
}

void save_checkpoint(const HostModel& host, const std::filesystem::path& path) {
  io::write_file(to_container(host), path);
}

HostModel load_host_checkpoint(const std::filesystem::path& path) {
  return host_from_container(io::read_file(path));
}

}  // namespace fden::host

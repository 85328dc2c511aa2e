// SPDX-License-Identifier: Apache-2.0
#include "fden/model/fden.hpp"

#include <stdexcept>

#include "fden/core/digest.hpp"

namespace fden::model {

FdenWidths FdenWidths::uniform(int w) {
  FdenWidths out;
  for (std::vector<int>* v : {&out.global_decoder, &out.local_decoder, &out.stream,
                              &out.global_encoder, &out.statnet, &out.head}) {
    for (int& x : *v) x = w;
  }
  return out;
}

FactorSet FactorSet::rows(Eigen::Index first, Eigen::Index count) const {
  FactorSet out;
  for (const Tensor& f : factors) out.factors.push_back(f.middleRows(first, count));
  return out;
}

Tensor FactorSet::concat() const {
  if (factors.empty()) return Tensor();
  Tensor out(batch(), static_cast<Eigen::Index>(factors.size()) * factors.front().cols());
  Eigen::Index col = 0;
  for (const Tensor& f : factors) {
    if (f.rows() != out.rows()) throw ShapeError("FactorSet::concat: batch mismatch");
    out.middleCols(col, f.cols()) = f;
    col += f.cols();
  }
  return out;
}

namespace {

// Hidden layers leaky, first one batch-normed, linear output; dropout on every input.
std::vector<LayerSpec> stack(const std::vector<int>& hidden, int out, double dropout) {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers.push_back({hidden[i], i == 0, dropout, Activation::leaky_relu});
  }
  layers.push_back({out, false, dropout, Activation::linear});
  return layers;
}

void update_vec(Sha256& h, const RowVector& v) {
  Tensor t = v;
  h.update_f32(t);
}

void round_vec(RowVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<double>(static_cast<float>(v[i]));
}

}  // namespace

FdenModel::FdenModel(FdenArch arch) : arch_(std::move(arch)) {
  const int d = arch_.dim;
  const int n = arch_.n_factors();
  if (d <= 0) throw std::invalid_argument("FdenModel: dim must be positive");
  if (n <= 0) throw std::invalid_argument("FdenModel: need at least one supervised factor");
  for (int c : arch_.classes) {
    if (c < 2) throw std::invalid_argument("FdenModel: every head needs at least two classes");
  }
  const double p = arch_.dropout;
  const double s = arch_.leaky_slope;
  const FdenWidths& w = arch_.widths;
  global_decoder_ = Mlp("fden.dec", d, stack(w.global_decoder, 2 * d, p), s);
  for (int i = 0; i <= n; ++i) {
    const std::string k = std::to_string(i);
    local_decoders_.emplace_back("fden.dec" + k, 2 * d, stack(w.local_decoder, d, p), s);
    streams_.emplace_back("fden.enc" + k, d, stack(w.stream, d, p), s);
  }
  global_encoder_ = Mlp("fden.enc", (n + 1) * d, stack(w.global_encoder, d, p), s);
  statnet_ = Mlp("fden.stat", (n + 1) * d, stack(w.statnet, 1, p), s);
  for (int i = 1; i <= n; ++i) {
    heads_.emplace_back("fden.head" + std::to_string(i), d, stack(w.head, arch_.classes[i - 1], p), s);
  }
}

void FdenModel::initialize(double sigma, std::uint64_t seed) {
  Rng rng = make_stream(seed, "fden.init");
  for (Mlp* m : networks()) init_weights(*m, sigma, rng);
}

const Mlp& FdenModel::head_network(int factor) const {
  if (factor < 1 || factor > n_factors()) {
    throw std::out_of_range("no alignment head for factor " + std::to_string(factor));
  }
  return heads_[factor - 1];
}

void FdenModel::check_factors(std::size_t count, Eigen::Index cols) const {
  if (count != static_cast<std::size_t>(n_factors() + 1)) {
    throw ShapeError("entangle: expected " + std::to_string(n_factors() + 1) + " factors, got " +
                     std::to_string(count));
  }
  if (cols != dim()) throw ShapeError("entangle: factor width " + std::to_string(cols));
}

FactorSet FdenModel::decompose(const Tensor& z) const {
  if (z.cols() != dim()) throw ShapeError("decompose: expected width " + std::to_string(dim()) + ", got " + shape_str(z));
  const Tensor z_dec = global_decoder_.infer(z);
  FactorSet fs;
  for (const Mlp& m : local_decoders_) fs.factors.push_back(m.infer(z_dec));
  return fs;
}

Tensor FdenModel::entangle(const FactorSet& fs) const {
  if (fs.count() == 0) throw ShapeError("entangle: empty factor set");
  const Eigen::Index b = fs.batch();
  for (const Tensor& f : fs.factors) {
    check_factors(fs.count(), f.cols());
    if (f.rows() != b) throw ShapeError("entangle: batch mismatch across factors");
  }
  Tensor cat(b, static_cast<Eigen::Index>(fs.count()) * dim());
  for (std::size_t i = 0; i < fs.count(); ++i) {
    cat.middleCols(static_cast<Eigen::Index>(i) * dim(), dim()) = streams_[i].infer(fs[i]);
  }
  return global_encoder_.infer(cat);
}

Tensor FdenModel::head_logits(int factor, const Tensor& f) const {
  return head_network(factor).infer(f);
}

Labels FdenModel::predict(int factor, const Tensor& f) const {
  const Tensor logits = head_logits(factor, f);
  Labels out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return out;
}

std::vector<ad::Var> FdenModel::decompose(ad::Tape& tape, ad::Var z, Mode mode, Rng* rng) {
  if (z.cols() != dim()) throw ShapeError("decompose: expected width " + std::to_string(dim()));
  ad::Var z_dec = global_decoder_.forward(tape, z, mode, rng);
  std::vector<ad::Var> out;
  for (Mlp& m : local_decoders_) out.push_back(m.forward(tape, z_dec, mode, rng));
  return out;
}

ad::Var FdenModel::entangle(ad::Tape& tape, const std::vector<ad::Var>& factors, Mode mode, Rng* rng) {
  if (factors.empty()) throw ShapeError("entangle: empty factor set");
  std::vector<ad::Var> parts;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    check_factors(factors.size(), factors[i].cols());
    if (factors[i].rows() != factors[0].rows()) throw ShapeError("entangle: batch mismatch across factors");
    parts.push_back(streams_[i].forward(tape, factors[i], mode, rng));
  }
  return global_encoder_.forward(tape, ad::concat_cols(parts), mode, rng);
}

ad::Var FdenModel::head(ad::Tape& tape, int factor, ad::Var f, Mode mode, Rng* rng) {
  head_network(factor);
  return heads_[factor - 1].forward(tape, f, mode, rng);
}

ad::Var FdenModel::statnet(ad::Tape& tape, ad::Var input, Mode mode, Rng* rng) {
  return statnet_.forward(tape, input, mode, rng);
}

namespace {

void append(std::vector<ad::Parameter*>& out, Mlp& m) {
  for (ad::Parameter* p : m.parameters()) out.push_back(p);
}

}  // namespace

std::vector<ad::Parameter*> FdenModel::decomposer_parameters() {
  std::vector<ad::Parameter*> out;
  append(out, global_decoder_);
  for (Mlp& m : local_decoders_) append(out, m);
  return out;
}

std::vector<ad::Parameter*> FdenModel::entangler_parameters() {
  std::vector<ad::Parameter*> out;
  for (Mlp& m : streams_) append(out, m);
  append(out, global_encoder_);
  return out;
}

std::vector<ad::Parameter*> FdenModel::statnet_parameters() {
  std::vector<ad::Parameter*> out;
  append(out, statnet_);
  return out;
}

std::vector<ad::Parameter*> FdenModel::head_parameters() {
  std::vector<ad::Parameter*> out;
  for (Mlp& m : heads_) append(out, m);
  return out;
}

std::vector<ad::Parameter*> FdenModel::parameters() {
  std::vector<ad::Parameter*> out;
  for (Mlp* m : networks()) append(out, *m);
  return out;
}

std::vector<const Mlp*> FdenModel::networks() const {
  std::vector<const Mlp*> out{&global_decoder_};
  for (const Mlp& m : local_decoders_) out.push_back(&m);
  for (const Mlp& m : streams_) out.push_back(&m);
  out.push_back(&global_encoder_);
  out.push_back(&statnet_);
  for (const Mlp& m : heads_) out.push_back(&m);
  return out;
}

std::vector<Mlp*> FdenModel::networks() {
  std::vector<Mlp*> out;
  for (const Mlp* m : std::as_const(*this).networks()) out.push_back(const_cast<Mlp*>(m));
  return out;
}

std::string FdenModel::checksum() const {
  Sha256 h;
  h.update("fden:" + std::to_string(dim()));
  for (int c : arch_.classes) h.update(":" + std::to_string(c));
  for (const Mlp* m : networks()) {
    for (const DenseLayer& l : m->layers()) {
      h.update(l.weight.name).update_f32(l.weight.value).update_f32(l.bias.value);
      if (l.bn) {
        h.update_f32(l.bn->gamma.value).update_f32(l.bn->beta.value);
        update_vec(h, l.bn->running_mean);
        update_vec(h, l.bn->running_var);
      }
    }
  }
  return h.hex();
}

void FdenModel::round_to_f32() {
  for (Mlp* m : networks()) {
    for (DenseLayer& l : m->layers()) {
      fden::round_to_f32(l.weight.value);
      fden::round_to_f32(l.bias.value);
      if (l.bn) {
        fden::round_to_f32(l.bn->gamma.value);
        fden::round_to_f32(l.bn->beta.value);
        round_vec(l.bn->running_mean);
        round_vec(l.bn->running_var);
      }
    }
  }
}

namespace {

const char* const kWidthKeys[] = {"global_decoder", "local_decoder", "stream",
                                  "global_encoder", "statnet", "head"};

std::vector<std::vector<int>*> width_fields(FdenWidths& w) {
  return {&w.global_decoder, &w.local_decoder, &w.stream, &w.global_encoder, &w.statnet, &w.head};
}

}  // namespace

io::Container to_container(const FdenModel& model) {
  io::Container c;
  const FdenArch& a = model.arch();
  c.add_scalar("fden.meta.dim", a.dim);
  c.add_labels("fden.meta.classes", a.classes);
  c.add_scalar("fden.meta.dropout", a.dropout);
  c.add_scalar("fden.meta.leaky_slope", a.leaky_slope);
  FdenWidths w = a.widths;
  auto fields = width_fields(w);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    c.add_labels(std::string("fden.meta.widths.") + kWidthKeys[i], *fields[i]);
  }
  for (const Mlp* m : model.networks()) io::store_mlp(c, *m);
  return c;
}

FdenModel fden_from_container(const io::Container& c) {
  FdenArch a;
  a.dim = static_cast<int>(c.scalar("fden.meta.dim"));
  a.classes = c.labels("fden.meta.classes");
  a.dropout = c.decimal("fden.meta.dropout");
  a.leaky_slope = c.decimal("fden.meta.leaky_slope");
  auto fields = width_fields(a.widths);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    *fields[i] = c.labels(std::string("fden.meta.widths.") + kWidthKeys[i]);
  }
  FdenModel model(a);
  for (Mlp* m : model.networks()) io::load_mlp(c, *m);
  return model;
}

void save_checkpoint(const FdenModel& model, const std::filesystem::path& path) {
  io::write_file(to_container(model), path);
}

FdenModel load_fden_checkpoint(const std::filesystem::path& path) {
  return fden_from_container(io::read_file(path));
}

}  // namespace fden::model

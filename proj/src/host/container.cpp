// SPDX-License-Identifier: Apache-2.0
#include "fden/host/container.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fden::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated container while reading ") + what);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t Entry::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void Container::add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data) {
  if (contains(name)) throw std::invalid_argument("duplicate container entry " + name);
  Entry e{std::move(name), std::move(dims), std::move(data)};
  if (e.count() != e.data.size()) throw ShapeError("entry " + e.name + ": payload size does not match dims");
  entries_.push_back(std::move(e));
}

void Container::add_tensor(std::string name, const Tensor& t) {
  std::vector<float> d(static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i) d[static_cast<std::size_t>(i)] = static_cast<float>(t.data()[i]);
  add(std::move(name), {static_cast<std::uint32_t>(t.rows()), static_cast<std::uint32_t>(t.cols())}, std::move(d));
}

void Container::add_vector(std::string name, const RowVector& v) {
  std::vector<float> d(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) d[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  add(std::move(name), {static_cast<std::uint32_t>(v.size())}, std::move(d));
}

void Container::add_labels(std::string name, const Labels& labels) {
  std::vector<float> d(labels.begin(), labels.end());
  add(std::move(name), {static_cast<std::uint32_t>(labels.size())}, std::move(d));
}

void Container::add_scalar(std::string name, double v) { add(std::move(name), {1}, {static_cast<float>(v)}); }

bool Container::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const Entry& Container::at(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw FormatError("missing container entry " + std::string(name));
}

Tensor Container::tensor(std::string_view name) const {
  const Entry& e = at(name);
  Eigen::Index rows = 1, cols = 1;
  if (e.dims.size() == 1) {
    cols = e.dims[0];
  } else if (e.dims.size() == 2) {
    rows = e.dims[0];
    cols = e.dims[1];
  } else {
    throw FormatError("entry " + e.name + " has rank " + std::to_string(e.dims.size()) + ", expected 1 or 2");
  }
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = e.data[static_cast<std::size_t>(i)];
  return t;
}

Labels Container::labels(std::string_view name) const {
  const Entry& e = at(name);
  if (e.dims.size() != 1) throw FormatError("label entry " + e.name + " must have rank 1");
  Labels out;
  out.reserve(e.data.size());
  for (float f : e.data) {
    if (f != std::floor(f) || f < 0.0f) throw FormatError("label entry " + e.name + " holds a non-integer value");
    out.push_back(static_cast<int>(f));
  }
  return out;
}

double Container::scalar(std::string_view name) const {
  const Entry& e = at(name);
  if (e.data.size() != 1) throw FormatError("entry " + e.name + " is not a scalar");
  return e.data[0];
}

double Container::decimal(std::string_view name) const {
  const float f = static_cast<float>(scalar(name));
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), f);
  if (ec != std::errc()) throw FormatError("cannot format entry " + std::string(name));
  double d = 0.0;
  std::from_chars(buf.data(), end, d);
  return d;
}

std::string encode(const Container& c) {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(c.entries().size()));
  for (const Entry& e : c.entries()) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_u32(out, d);
    for (float f : e.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      put_u32(out, bits);
    }
  }
  return out;
}

Container decode(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic: not an FDEN container");
  const auto version = static_cast<std::uint8_t>(r.take(1, "version")[0]);
  if (version != kVersion) throw FormatError("unsupported container version " + std::to_string(version));
  const std::uint32_t n = r.u32("entry count");
  Container c;
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t len = r.u32("name length");
    std::string name(r.take(len, "name"));
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) throw FormatError("entry " + name + ": implausible rank " + std::to_string(rank));
    std::vector<std::uint32_t> dims;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      dims.push_back(r.u32("dims"));
      count *= dims.back();
      if (count > (std::uint64_t{1} << 34)) throw FormatError("entry " + name + ": payload too large");
    }
    auto payload = r.take(static_cast<std::size_t>(count) * 4, "payload");
    std::vector<float> data(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[i * 4 + b])) << (8 * b);
      std::memcpy(&data[i], &bits, sizeof bits);
    }
    c.add(std::move(name), std::move(dims), std::move(data));
  }
  if (!r.done()) throw FormatError("trailing bytes after last container entry");
  return c;
}

void write_file(const Container& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = encode(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Container read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode(ss.str());
}

void store_mlp(Container& c, const Mlp& mlp) {
  for (const DenseLayer& l : mlp.layers()) {
    c.add_tensor(l.weight.name, l.weight.value);
    c.add_tensor(l.bias.name, l.bias.value);
    if (l.bn) {
      c.add_tensor(l.bn->gamma.name, l.bn->gamma.value);
      c.add_tensor(l.bn->beta.name, l.bn->beta.value);
      c.add_vector(l.weight.name.substr(0, l.weight.name.size() - 6) + "bn_running_mean", l.bn->running_mean);
      c.add_vector(l.weight.name.substr(0, l.weight.name.size() - 6) + "bn_running_var", l.bn->running_var);
    }
  }
}

namespace {

void load_into(const Container& c, const std::string& name, Tensor& dst) {
  Tensor t = c.tensor(name);
  if (t.rows() != dst.rows() || t.cols() != dst.cols()) {
    throw FormatError("entry " + name + " has shape " + shape_str(t) + ", model expects " + shape_str(dst));
  }
  dst = t;
}

}  // namespace

void load_mlp(const Container& c, Mlp& mlp) {
  for (DenseLayer& l : mlp.layers()) {
    load_into(c, l.weight.name, l.weight.value);
    load_into(c, l.bias.name, l.bias.value);
    if (l.bn) {
      load_into(c, l.bn->gamma.name, l.bn->gamma.value);
      load_into(c, l.bn->beta.name, l.bn->beta.value);
      const std::string stem = l.weight.name.substr(0, l.weight.name.size() - 6);
      Tensor m = l.bn->running_mean, v = l.bn->running_var;
      load_into(c, stem + "bn_running_mean", m);
      load_into(c, stem + "bn_running_var", v);
      l.bn->running_mean = m.row(0);
      l.bn->running_var = v.row(0);
    }
  }
}

}  // namespace fden::io

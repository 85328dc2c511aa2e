// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "fden/core/tensor.hpp"

namespace fden {

/// Incremental SHA-256 (OpenSSL EVP) with a hex digest.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(const void* data, std::size_t n);
  Sha256& update(std::string_view s) { return update(s.data(), s.size()); }
  /// Feeds the shape and the float32-rounded values, little-endian.
  Sha256& update_f32(const Tensor& t);
  std::string hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Rounds every element to the nearest float32 value.
void round_to_f32(Tensor& t);

}  // namespace fden

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fden/cli/config.hpp"

namespace fden::cli {

/// A manifest digest no longer matches the file on disk.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Files the manifest lists but the directory lacks.
class MissingArtifacts : public std::runtime_error {
 public:
  explicit MissingArtifacts(std::vector<std::string> files);
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::vector<std::string> files_;
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kToolVersion = "0.1.0";

/// manifest.json of a run directory: the configs used, every command run
/// and a SHA-256 per artifact. Only the manifest holds timestamps.
class Manifest {
 public:
  /// Loads the directory's manifest, or starts an empty one.
  explicit Manifest(std::filesystem::path dir);

  void record_command(const std::string& name, const std::vector<std::string>& argv,
                      const ExperimentConfig& config);
  /// Hashes `file` (relative to the directory) and records it.
  void add_artifact(const std::string& file, const std::string& command, const std::string& config_digest);
  void save() const;

  /// Throws MissingArtifacts or IntegrityError. Returns the artifact names.
  static std::vector<std::string> verify(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string json_;  // serialized state
};

struct ScoreRow {
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
};

/// Header `metric,value,n,seed,config_digest`.
void write_scores(const std::filesystem::path& path, const std::vector<ScoreRow>& rows, std::int64_t seed,
                  const std::string& config_digest);

struct ScoreLine {
  std::string metric;
  std::string value;
  std::string n;
  std::string seed;
  std::string config_digest;
};
std::vector<ScoreLine> read_scores(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_real(double v);

/// Consolidated report.csv and summary.txt for a run directory. Verifies the
/// manifest first; `ablation` (optional) is a second run directory merged
/// under the `ablation.` prefix. Returns the summary text.
std::string emit_report(const std::filesystem::path& dir, const std::filesystem::path& ablation = {});

}  // namespace fden::cli

// SPDX-License-Identifier: Apache-2.0
#include "fden/cli/run_dir.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "fden/core/digest.hpp"
#include "fden/model/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace fden::cli {
namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + p.string());
}

json load_manifest(const fs::path& dir) {
  const fs::path p = dir / kManifestName;
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw IntegrityError(p.string() + ": unreadable manifest: " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

MissingArtifacts::MissingArtifacts(std::vector<std::string> files)
    : std::runtime_error("missing artifacts: " + join(files, ", ")), files_(std::move(files)) {}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Manifest::Manifest(fs::path dir) : dir_(std::move(dir)) {
  json m;
  if (fs::exists(dir_ / kManifestName)) {
    m = load_manifest(dir_);
  } else {
    m["tool"] = "fden";
    m["version"] = kToolVersion;
    m["created"] = utc_now();
    m["commands"] = json::array();
    m["artifacts"] = json::object();
  }
  json_ = m.dump();
}

void Manifest::record_command(const std::string& name, const std::vector<std::string>& argv,
                              const ExperimentConfig& config) {
  json m = json::parse(json_);
  json cfg = json::object();
  for (const auto& k : config_keys()) cfg[k] = get_value(config, k);
  const std::string digest = config_digest(config);
  m["config"] = cfg;
  m["config_digest"] = digest;
  m["seeds"] = {{"seed", config.seed}, {"host_seed", config.seed}, {"split_seed", config.seed}};
  m["versions"] = {{"fden", kToolVersion}, {"container_format", 1}, {"cxx", __cplusplus}};
  m["commands"].push_back({{"name", name}, {"argv", argv}, {"config_digest", digest}, {"time", utc_now()}});
  json_ = m.dump();
}

void Manifest::add_artifact(const std::string& file, const std::string& command, const std::string& config_digest) {
  json m = json::parse(json_);
  m["artifacts"][file] = {{"sha256", sha256_file(dir_ / file)}, {"command", command}, {"config_digest", config_digest}};
  json_ = m.dump();
}

void Manifest::save() const {
  fs::create_directories(dir_);
  const fs::path tmp = dir_ / (std::string(kManifestName) + ".tmp");
  write_text(tmp, json::parse(json_).dump(2) + "\n");
  fs::rename(tmp, dir_ / kManifestName);
}

std::vector<std::string> Manifest::verify(const fs::path& dir) {
  if (!fs::exists(dir / kManifestName)) throw MissingArtifacts({kManifestName});
  const json m = load_manifest(dir);
  if (!m.contains("artifacts") || !m["artifacts"].is_object()) throw IntegrityError("manifest has no artifact table");
  std::vector<std::string> names, missing;
  for (const auto& [file, entry] : m["artifacts"].items()) {
    names.push_back(file);
    if (!fs::exists(dir / file)) missing.push_back(file);
  }
  if (!missing.empty()) throw MissingArtifacts(missing);
  for (const auto& [file, entry] : m["artifacts"].items()) {
    if (!entry.contains("sha256") || !entry["sha256"].is_string()) throw IntegrityError(file + ": no digest");
    if (sha256_file(dir / file) != entry["sha256"].get<std::string>()) {
      throw IntegrityError(file + ": digest does not match manifest");
    }
  }
  return names;
}

void write_scores(const fs::path& path, const std::vector<ScoreRow>& rows, std::int64_t seed,
                  const std::string& config_digest) {
  std::ostringstream os;
  os << "metric,value,n,seed,config_digest\n";
  for (const auto& r : rows) {
    os << r.metric << ',' << format_real(r.value) << ',' << r.n << ',' << seed << ',' << config_digest << '\n';
  }
  write_text(path, os.str());
}

std::vector<ScoreLine> read_scores(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line) || line != "metric,value,n,seed,config_digest") {
    throw std::runtime_error(path.string() + ": not a score file");
  }
  std::vector<ScoreLine> out;
  int no = 1;
  while (std::getline(is, line)) {
    ++no;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 5) throw std::runtime_error(path.string() + ": line " + std::to_string(no) + ": expected 5 fields");
    out.push_back({c[0], c[1], c[2], c[3], c[4]});
  }
  return out;
}

namespace {

struct Section {
  std::string name;
  std::string file;
};

const std::vector<Section>& score_sections() {
  static const std::vector<Section> s = {{"host", "host_scores.csv"},
                                         {"train", "train_scores.csv"},
                                         {"disentanglement", "disent_scores.csv"},
                                         {"fewshot", "fewshot_scores.csv"},
                                         {"mi_bench", "mi_bench.csv"}};
  return s;
}

struct Report {
  std::ostringstream csv;
  std::ostringstream summary;
  std::map<std::string, std::string> values;  // section.metric -> value
};

void add_run(Report& r, const fs::path& dir, const std::string& prefix) {
  const auto artifacts = Manifest::verify(dir);
  const json m = load_manifest(dir);
  const std::string digest = m.value("config_digest", std::string());
  r.summary << prefix << "run " << dir.filename().string() << "  config " << digest.substr(0, 16) << "  "
            << artifacts.size() << " verified artifacts\n";

  const auto listed = [&](const std::string& f) {
    return std::find(artifacts.begin(), artifacts.end(), f) != artifacts.end();
  };

  if (listed("curves.csv")) {
    const auto curve = model::read_curves_csv(dir / "curves.csv");
    std::vector<double> lm;
    lm.reserve(curve.size());
    for (const auto& s : curve) lm.push_back(s.loss_m);
    const std::size_t window = std::clamp<std::size_t>(curve.size() / 20, 1, 500);
    const auto sm = model::smooth(lm, window);
    const double peak = sm.empty() ? 0.0 : *std::max_element(sm.begin(), sm.end());
    const double last = sm.empty() ? 0.0 : sm.back();
    const auto& tail = curve.empty() ? model::StepMetrics{} : curve.back();
    const std::vector<std::pair<std::string, double>> rows = {
        {"steps", static_cast<double>(curve.size())},
        {"final_loss_total", tail.loss_total},
        {"final_loss_r", tail.loss_r},
        {"final_loss_c", tail.loss_c},
        {"final_loss_m", tail.loss_m},
        {"smoothed_loss_m_max", peak},
        {"smoothed_loss_m_final", last},
        {"smoothed_loss_m_final_over_max", peak > 0 ? last / peak : 0.0}};
    for (const auto& [k, v] : rows) {
      const std::string value = format_real(v);
      r.csv << prefix << "curves," << k << ',' << value << ',' << curve.size() << ",," << digest << '\n';
      r.values[prefix + "curves." + k] = value;
    }
    r.summary << "  curves: " << curve.size() << " steps, final L=" << format_real(tail.loss_total)
              << ", smoothed L_M final/max=" << format_real(peak > 0 ? last / peak : 0.0) << '\n';
  } else {
    r.summary << "  curves: missing\n";
  }

  for (const auto& sec : score_sections()) {
    if (!listed(sec.file)) {
      r.summary << "  " << sec.name << ": missing\n";
      continue;
    }
    const auto lines = read_scores(dir / sec.file);
    r.summary << "  " << sec.name << ":";
    for (const auto& l : lines) {
      r.csv << prefix << sec.name << ',' << l.metric << ',' << l.value << ',' << l.n << ',' << l.seed << ','
            << l.config_digest << '\n';
      r.values[prefix + sec.name + "." + l.metric] = l.value;
      r.summary << ' ' << l.metric << '=' << l.value;
    }
    r.summary << '\n';
  }
}

}  // namespace

std::string emit_report(const fs::path& dir, const fs::path& ablation) {
  Report r;
  r.csv << "section,metric,value,n,seed,config_digest\n";
  add_run(r, dir, "");
  if (!ablation.empty()) {
    add_run(r, ablation, "ablation.");
    r.summary << "comparison (run vs ablation):\n";
    bool any = false;
    for (const auto& [key, value] : r.values) {
      if (key.starts_with("ablation.")) continue;
      const auto other = r.values.find("ablation." + key);
      if (other == r.values.end()) continue;
      r.summary << "  " << key << ": " << value << " vs " << other->second << '\n';
      any = true;
    }
    if (!any) r.summary << "  no shared metrics\n";
  }
  write_text(dir / "report.csv", r.csv.str());
  write_text(dir / "summary.txt", r.summary.str());
  return r.summary.str();
}

}  // namespace fden::cli

// SPDX-License-Identifier: Apache-2.0
#include "fden/cli/run.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "fden/cli/config.hpp"
#include "fden/cli/experiments.hpp"
#include "fden/cli/run_dir.hpp"
#include "fden/core/digest.hpp"
#include "fden/data/shapes.hpp"
#include "fden/host/latent.hpp"
#include "fden/metrics/analysis.hpp"
#include "fden/model/manipulate.hpp"
#include "fden/model/trainer.hpp"

namespace fs = std::filesystem;

namespace fden::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keys;
  std::string out = "run";
  std::string host_path;
  std::string fden_path;
};

struct Local {
  int progress = 1000;
  double rho = 0.9;
  long index = -1;
  long index_b = -1;
  int factor = 1;
  int target = -1;
  int points = 5;
  std::string ablation;
};

ExperimentConfig resolve_config(const Common& o) {
  ExperimentConfig c;
  if (!o.config_file.empty()) c = parse_config_file(o.config_file);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    set_value(c, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  for (const auto& k : config_keys()) {
    if (const auto it = o.keys.find(k); it != o.keys.end()) set_value(c, k, it->second);
  }
  c.validate();
  return c;
}

struct Job {
  std::string name;
  std::vector<std::string> argv;
  ExperimentConfig config;
  std::string digest;
  fs::path dir;
  fs::path host_path;
  fs::path fden_path;
  Manifest manifest;

  Job(std::string n, std::vector<std::string> a, ExperimentConfig c, const Common& o)
      : name(std::move(n)), argv(std::move(a)), config(std::move(c)), digest(config_digest(config)), dir(o.out),
        host_path(o.host_path.empty() ? dir / "host.fden" : fs::path(o.host_path)),
        fden_path(o.fden_path.empty() ? dir / "fden.fden" : fs::path(o.fden_path)),
        manifest((fs::create_directories(dir), dir)) {
    manifest.record_command(name, argv, config);
  }

  void artifact(const std::string& file) { manifest.add_artifact(file, name, digest); }
  void scores(const std::string& file, const std::vector<ScoreRow>& rows) {
    write_scores(dir / file, rows, config.seed, digest);
    artifact(file);
  }
  // Records an output that may live outside the run directory.
  void output(const fs::path& p) {
    if (fs::absolute(p.parent_path()) == fs::absolute(dir)) artifact(p.filename().string());
  }
  void finish() { manifest.save(); }
};

data::ShapeDataset dataset() { return data::make_dataset(); }

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw std::runtime_error(std::string(what) + " not found: " + p.string());
}

host::HostModel load_host(const Job& job) {
  require_file(job.host_path, "host checkpoint");
  return host::load_host_checkpoint(job.host_path);
}

model::FdenModel load_fden(const Job& job) {
  require_file(job.fden_path, "FDEN checkpoint");
  return model::load_fden_checkpoint(job.fden_path);
}

// Host and FDEN checkpoint digests, re-checked when a read-only command ends.
struct ReadOnlyGuard {
  std::vector<std::pair<fs::path, std::string>> files;
  explicit ReadOnlyGuard(const Job& job) {
    require_file(job.host_path, "host checkpoint");
    require_file(job.fden_path, "FDEN checkpoint");
    for (const auto& p : {job.host_path, job.fden_path}) files.emplace_back(p, sha256_file(p));
  }
  void check() const {
    for (const auto& [p, d] : files) {
      if (sha256_file(p) != d) throw IntegrityError(p.string() + " changed during a read-only command");
    }
  }
};

void write_image_rows(std::ostream& out, const data::ShapeDataset& ds, const Tensor& images,
                      const std::vector<std::string>& kind, const std::vector<double>& alpha) {
  out << "kind,alpha,nearest,shape,scale,pos_x,pos_y";
  for (int p = 0; p < data::kPixels; ++p) out << ",pix_" << p;
  out << '\n';
  for (Eigen::Index r = 0; r < images.rows(); ++r) {
    const std::size_t near = data::nearest_image(ds, images.row(r));
    const auto& f = ds.factors[near];
    out << kind[r] << ',' << format_real(alpha[r]) << ',' << near << ',' << static_cast<int>(f.shape) << ','
        << f.scale << ',' << f.pos_x << ',' << f.pos_y;
    for (Eigen::Index p = 0; p < images.cols(); ++p) out << ',' << format_real(images(r, p));
    out << '\n';
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + p.string());
}

int cmd_train_host(Job& job) {
  const auto ds = dataset();
  const auto h = host::train_host(ds, job.config.host(), static_cast<std::uint64_t>(job.config.seed));
  host::save_checkpoint(h, job.host_path);
  job.output(job.host_path);
  const double err = host::reconstruction_error(ds.images, h.decode(h.encode(ds.images)));
  job.scores("host_scores.csv", {{"host_recon_error", err, ds.size()}});
  std::cout << "host reconstruction error " << format_real(err) << '\n';
  return kExitOk;
}

int cmd_train_fden(Job& job, const Local& l) {
  const auto ds = dataset();
  if (!fs::exists(job.host_path)) {
    std::cerr << "no host checkpoint at " << job.host_path.string() << ", training one\n";
    const auto h = host::train_host(ds, job.config.host(), static_cast<std::uint64_t>(job.config.seed));
    host::save_checkpoint(h, job.host_path);
    job.output(job.host_path);
  }
  const auto h = load_host(job);
  const std::string before = h.checksum();
  const auto latents = host::encode_dataset(h, ds);
  const auto train_rows = dataset_split(ds, job.config).first;

  model::FdenModel m(job.config.arch());
  m.initialize(job.config.init_sigma, static_cast<std::uint64_t>(job.config.seed));
  const auto t0 = std::chrono::steady_clock::now();
  model::StepCallback progress;
  if (l.progress > 0) {
    progress = [&](const model::StepMetrics& s) {
      if (s.step % l.progress != 0) return;
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "step %lld  L=%.4f R=%.4f C=%.4f M=%.4f  %.0fs\n", static_cast<long long>(s.step),
                   s.loss_total, s.loss_r, s.loss_c, s.loss_m, el);
    };
  }
  const auto curve = model::train(m, &h, latents, train_rows, job.config.train(), progress);
  const std::string after = h.checksum();

  model::save_checkpoint(m, job.fden_path);
  job.output(job.fden_path);
  model::write_curves_csv(curve, job.dir / "curves.csv");
  job.artifact("curves.csv");
  if (!job.config.grl) {
    std::ostringstream os;
    os << "phase,first_step,last_step,loss_m_sign\n";
    const std::int64_t steps = job.config.steps;
    const std::int64_t sw = std::min(job.config.phase_switch, steps + 1);
    if (sw > 1) os << "1,1," << (sw - 1) << ",ascend\n";
    if (sw <= steps) os << "2," << sw << ',' << steps << ",descend\n";
    write_file(job.dir / "phases.csv", os.str());
    job.artifact("phases.csv");
  }
  job.scores("train_scores.csv", training_scores(curve, before == after));
  if (before != after) throw IntegrityError("host checksum changed during FDEN training");
  std::cout << "fden checkpoint " << sha256_file(job.fden_path) << '\n';
  return kExitOk;
}

int cmd_eval_disent(Job& job) {
  const auto ds = dataset();
  const auto h = load_host(job);
  const auto m = load_fden(job);
  const auto rows = disentanglement_scores(m, h, ds, job.config);
  job.scores("disent_scores.csv", rows);
  for (const auto& r : rows) std::cout << r.metric << ' ' << format_real(r.value) << '\n';
  return kExitOk;
}

int cmd_eval_fewshot(Job& job) {
  const auto ds = dataset();
  const auto h = load_host(job);
  const auto m = load_fden(job);
  const auto rows = fewshot_scores(m, h, ds, job.config);
  job.scores("fewshot_scores.csv", rows);
  for (const auto& r : rows) std::cout << r.metric << ' ' << format_real(r.value) << '\n';
  return kExitOk;
}

void check_index(long i, std::size_t n, const char* flag) {
  if (i < 0 || static_cast<std::size_t>(i) >= n) {
    throw UsageError(std::string(flag) + " must lie in [0, " + std::to_string(n - 1) + "]");
  }
}

int cmd_transfer(Job& job, const Local& l) {
  const auto ds = dataset();
  const ReadOnlyGuard guard(job);
  const auto h = load_host(job);
  const auto m = load_fden(job);
  check_index(l.index, ds.size(), "--index");
  if (l.factor < 1 || l.factor > m.n_factors()) throw UsageError("--factor must name a supervised factor");
  const auto latents = host::encode_dataset(h, ds);
  const auto all = m.decompose(latents.z);
  const auto i = static_cast<std::size_t>(l.index);
  const auto moved =
      model::factor_transfer_mean(all, latents.labels[static_cast<std::size_t>(l.factor - 1)].second, i, l.factor, l.target);
  Tensor images(2, data::kPixels);
  images.row(0) = h.decode(m.entangle(all.rows(static_cast<Eigen::Index>(i), 1))).row(0);
  images.row(1) = h.decode(m.entangle(moved)).row(0);
  std::ostringstream os;
  write_image_rows(os, ds, images, {"source", "transfer"}, {1.0, 1.0});
  write_file(job.dir / "transfer.csv", os.str());
  guard.check();
  job.artifact("transfer.csv");
  return kExitOk;
}

int cmd_interpolate(Job& job, const Local& l) {
  const auto ds = dataset();
  const ReadOnlyGuard guard(job);
  const auto h = load_host(job);
  const auto m = load_fden(job);
  check_index(l.index, ds.size(), "--a");
  check_index(l.index_b, ds.size(), "--b");
  if (l.points < 2) throw UsageError("--points must be at least 2");
  if (l.factor < -1 || l.factor > m.n_factors()) throw UsageError("--factor must be -1 (all) or a factor index");
  const auto all = m.decompose(h.encode(ds.images));
  const auto a = all.rows(l.index, 1);
  const auto b = all.rows(l.index_b, 1);
  std::vector<bool> mask(all.count(), l.factor == -1);
  if (l.factor >= 0) mask[static_cast<std::size_t>(l.factor)] = true;
  Tensor images(l.points, data::kPixels);
  std::vector<double> alpha(l.points);
  for (int p = 0; p < l.points; ++p) {
    alpha[p] = 1.0 - static_cast<double>(p) / (l.points - 1);
    images.row(p) = h.decode(m.entangle(model::factor_interpolate(a, b, alpha[p], mask))).row(0);
  }
  std::ostringstream os;
  write_image_rows(os, ds, images, std::vector<std::string>(l.points, "interpolate"), alpha);
  write_file(job.dir / "interpolate.csv", os.str());
  guard.check();
  job.artifact("interpolate.csv");
  return kExitOk;
}

int cmd_mi_bench(Job& job, const Local& l) {
  if (!(l.rho > -1.0 && l.rho < 1.0)) throw UsageError("--rho must lie in (-1, 1)");
  const auto rows = mi_bench_scores(l.rho, job.config);
  job.scores("mi_bench.csv", rows);
  for (const auto& r : rows) std::cout << r.metric << ' ' << format_real(r.value) << '\n';
  return kExitOk;
}

int cmd_rsa(Job& job) {
  const auto ds = dataset();
  const ReadOnlyGuard guard(job);
  const auto h = load_host(job);
  const auto m = load_fden(job);
  const Tensor z = h.encode(ds.images);
  const Tensor r = metrics::rsa_matrix(metrics::rsa_units(z, m.decompose(z)));
  std::ostringstream os;
  metrics::write_matrix_csv(r, metrics::rsa_labels(m.dim(), static_cast<int>(m.n_factors() + 1)), os);
  write_file(job.dir / "rsa.csv", os.str());
  guard.check();
  job.artifact("rsa.csv");
  return kExitOk;
}

int cmd_export_factors(Job& job) {
  const auto ds = dataset();
  const ReadOnlyGuard guard(job);
  const auto h = load_host(job);
  const auto m = load_fden(job);
  const auto fs = m.decompose(h.encode(ds.images));
  const auto test = dataset_split(ds, job.config).second;
  std::vector<char> is_test(ds.size(), 0);
  for (auto t : test) is_test[t] = 1;
  std::ostringstream os;
  os << "idx,split,shape,scale,pos_x,pos_y";
  for (std::size_t k = 0; k < fs.count(); ++k) {
    for (int u = 0; u < m.dim(); ++u) os << ",f" << k << '_' << u;
  }
  os << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto& f = ds.factors[r];
    os << r << ',' << (is_test[r] ? "test" : "train") << ',' << static_cast<int>(f.shape) << ',' << f.scale << ','
       << f.pos_x << ',' << f.pos_y;
    for (std::size_t k = 0; k < fs.count(); ++k) {
      for (int u = 0; u < m.dim(); ++u) os << ',' << format_real(fs[k](static_cast<Eigen::Index>(r), u));
    }
    os << '\n';
  }
  write_file(job.dir / "factors.csv", os.str());
  guard.check();
  job.artifact("factors.csv");
  return kExitOk;
}

void add_common(CLI::App* sub, Common& o, bool models) {
  sub->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", o.sets, "KEY=VALUE override, repeatable");
  sub->add_option("--out", o.out, "run directory")->capture_default_str();
  for (const auto& k : config_keys()) {
    sub->add_option_function<std::string>("--" + k, [&o, k](const std::string& v) { o.keys[k] = v; },
                                          "config key " + k);
  }
  if (models) {
    sub->add_option("--host", o.host_path, "host checkpoint (default OUT/host.fden)");
    sub->add_option("--fden", o.fden_path, "FDEN checkpoint (default OUT/fden.fden)");
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"FDEN plug-in: disentangle a frozen host representation"};
  app.name(args.empty() ? "fden" : args.front());
  app.require_subcommand(1);
  Common o;
  Local l;

  auto* train_host = app.add_subcommand("train-host", "train and freeze the host autoencoder");
  add_common(train_host, o, true);
  auto* train_fden = app.add_subcommand("train-fden", "train FDEN on the frozen host code");
  add_common(train_fden, o, true);
  train_fden->add_option("--progress", l.progress, "report every N steps on stderr, 0 for none")->capture_default_str();
  auto* eval_disent = app.add_subcommand("eval-disent", "reconstruction, alignment and disentanglement scores");
  add_common(eval_disent, o, true);
  auto* eval_fewshot = app.add_subcommand("eval-fewshot", "episodic prototype matching");
  add_common(eval_fewshot, o, true);
  auto* transfer = app.add_subcommand("transfer", "replace one factor by a class mean");
  add_common(transfer, o, true);
  transfer->add_option("--index", l.index, "dataset row")->required();
  transfer->add_option("--factor", l.factor, "supervised factor")->capture_default_str();
  transfer->add_option("--target", l.target, "attribute value of the mean")->required();
  auto* interpolate = app.add_subcommand("interpolate", "blend factors of two samples");
  add_common(interpolate, o, true);
  interpolate->add_option("--a", l.index, "first dataset row")->required();
  interpolate->add_option("--b", l.index_b, "second dataset row")->required();
  interpolate->add_option("--factor", l.factor, "factor to blend, -1 for all")->capture_default_str();
  interpolate->add_option("--points", l.points, "number of steps")->capture_default_str();
  auto* mi_bench = app.add_subcommand("mi-bench", "DV estimate on a correlated Gaussian pair");
  add_common(mi_bench, o, false);
  mi_bench->add_option("--rho", l.rho, "correlation")->capture_default_str();
  auto* rsa = app.add_subcommand("rsa", "correlation grid over z and factor units");
  add_common(rsa, o, true);
  auto* export_factors = app.add_subcommand("export-factors", "factor CSV for external plotting");
  add_common(export_factors, o, true);
  auto* report = app.add_subcommand("report", "consolidated report of a run directory");
  report->add_option("--out", o.out, "run directory")->capture_default_str();
  report->add_option("--ablation", l.ablation, "second run directory to compare against");

  std::vector<const char*> cargv;
  cargv.reserve(args.size() + 1);
  if (args.empty()) cargv.push_back("fden");
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (report->parsed()) {
      std::cout << emit_report(o.out, l.ablation);
      return kExitOk;
    }
    const ExperimentConfig config = resolve_config(o);
    CLI::App* sub = app.get_subcommands().front();
    Job job(sub->get_name(), args, config, o);
    int code = kExitOk;
    if (sub == train_host) code = cmd_train_host(job);
    else if (sub == train_fden) code = cmd_train_fden(job, l);
    else if (sub == eval_disent) code = cmd_eval_disent(job);
    else if (sub == eval_fewshot) code = cmd_eval_fewshot(job);
    else if (sub == transfer) code = cmd_transfer(job, l);
    else if (sub == interpolate) code = cmd_interpolate(job, l);
    else if (sub == mi_bench) code = cmd_mi_bench(job, l);
    else if (sub == rsa) code = cmd_rsa(job);
    else if (sub == export_factors) code = cmd_export_factors(job);
    job.finish();
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

}  // namespace fden::cli

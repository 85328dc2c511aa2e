// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance suite: one PASS/FAIL line per criterion.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "fden/cli/config.hpp"
#include "fden/cli/experiments.hpp"
#include "fden/cli/run.hpp"
#include "fden/cli/run_dir.hpp"
#include "fden/core/digest.hpp"
#include "fden/core/optim.hpp"
#include "fden/core/runtime.hpp"
#include "fden/data/sampling.hpp"
#include "fden/host/host.hpp"
#include "fden/metrics/mi.hpp"
#include "fden/metrics/scores.hpp"
#include "fden/model/fden.hpp"
#include "fden/model/losses.hpp"
#include "fden/model/trainer.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using namespace fden;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Tally {
  int passed = 0;
  int failed = 0;
  void line(int id, bool ok, const std::string& title, const std::string& detail) {
    (ok ? passed : failed)++;
    std::printf("criterion %2d %s  %s  [%s]\n", id, ok ? "PASS" : "FAIL", title.c_str(), detail.c_str());
    std::fflush(stdout);
  }
};

// 1. Finite differences over every op on random micro-nets.
void gradient_integrity(Tally& t) {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  constexpr int kNets = 24;
  for (int trial = 0; trial < kNets; ++trial) {
    worst = std::max(worst, testing::micro_net_rel_error(rng, trial));

    std::uniform_int_distribution<int> dim(2, 5);
    const int r = dim(rng) + 2, k = dim(rng), c = dim(rng) + 3;
    Tensor a0 = testing::random_tensor(r, k, rng);
    Tensor b0 = testing::random_tensor(k, c, rng);
    Tensor c0 = testing::random_tensor(1, c, rng);
    Tensor g0 = testing::random_tensor(1, c, rng);
    Tensor be0 = testing::random_tensor(1, c, rng);
    Tensor mask = testing::random_tensor(r, c, rng);
    RowVector rm = RowVector::Random(c);
    RowVector rv = RowVector::Constant(c, 0.6);
    Labels labels(static_cast<std::size_t>(r));
    std::vector<std::size_t> perm(static_cast<std::size_t>(r));
    std::uniform_int_distribution<int> cls(0, c - 1);
    std::uniform_int_distribution<std::size_t> row(0, static_cast<std::size_t>(r) - 1);
    for (auto& l : labels) l = cls(rng);
    for (auto& p : perm) p = row(rng);
    auto build = [&](ad::Tape&, const std::vector<ad::Var>& v) {
      ad::Var h = ad::add_bias(ad::matmul(v[0], v[1]), v[2]);
      ad::Var bn = ad::batch_norm_train(h, v[3], v[4], 1e-5, nullptr, nullptr);
      ad::Var ev = ad::batch_norm_eval(h, v[3], v[4], rm, rv, 1e-5);
      ad::Var s = ad::sigmoid(bn);
      ad::Var lr = ad::leaky_relu(ad::scale(ev, 1.3), 0.01);
      ad::Var cat = ad::concat_cols({s, ad::grad_reverse(ad::grad_reverse(lr))});
      ad::Var rows = ad::concat_rows({ad::gather_rows(cat, perm), ad::slice_rows(cat, 1, 2)});
      ad::Var sl = ad::slice_cols(rows, 1, c);
      ad::Var d = ad::mean_row_sq_dist(sl, ad::slice_cols(rows, c - 1, c));
      ad::Var ce = ad::softmax_cross_entropy(ad::slice_rows(sl, 0, r), labels);
      ad::Var lme = ad::log_mean_exp(ad::sub(sl, ad::square(sl)));
      ad::Var m = ad::mean_all(ad::mul_constant(h, mask));
      return ad::add(ad::add(d, ce), ad::add(lme, ad::add(m, ad::sum_all(ad::square(bn)))));
    };
    worst = std::max(worst, testing::max_rel_error({a0, b0, c0, g0, be0}, build));
  }
  const double el = seconds_since(t0);
  t.line(1, worst < 1e-4 && el < 60.0, "gradient integrity",
         std::to_string(kNets) + " micro-nets, worst rel err " + fmt("%.2e", worst) + ", " + fmt("%.1f", el) + " s");
}

// 2. Reversal layer: identity forward, negation backward.
void grl_exactness(Tally& t) {
  Rng rng(202);
  std::uniform_int_distribution<int> dim(1, 40);
  bool forward_ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int r = dim(rng), c = dim(rng);
    const Tensor v = testing::random_tensor(r, c, rng, trial % 2 ? 1e3 : 1e-3);
    const Tensor up = testing::random_tensor(r, c, rng);
    ad::Tape tape;
    ad::Var x = tape.input(v);
    ad::Var y = ad::grad_reverse(x);
    forward_ok &= y.value().rows() == r && y.value().cols() == c &&
                  std::memcmp(y.value().data(), v.data(), sizeof(double) * v.size()) == 0;
    tape.backward(y, up);
    worst = std::max(worst, (tape.grad(x) + up).cwiseAbs().maxCoeff());
  }
  t.line(2, forward_ok && worst <= 1e-12, "GRL exactness",
         std::string("forward bitwise ") + (forward_ok ? "yes" : "no") + ", max |grad + upstream| " + fmt("%.1e", worst));
}

// 3. Adaptive clipping: norm min(|g_u|, |g_m|), direction of g_m.
void clipping_exactness(Tally& t) {
  Rng rng(303);
  std::uniform_int_distribution<int> dim(1, 12);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  double worst_norm = 0.0, worst_dir = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Tensor> gu, gm;
    const int parts = 1 + trial % 4;
    for (int k = 0; k < parts; ++k) {
      const int r = dim(rng), c = dim(rng);
      gu.push_back(testing::random_tensor(r, c, rng, std::pow(10.0, logscale(rng))));
      gm.push_back(testing::random_tensor(r, c, rng, std::pow(10.0, logscale(rng))));
    }
    const auto ga = clip_adaptive(gu, gm);
    double nu = 0, nm = 0, na = 0;
    for (int k = 0; k < parts; ++k) {
      nu += gu[k].squaredNorm();
      nm += gm[k].squaredNorm();
      na += ga[k].squaredNorm();
    }
    nu = std::sqrt(nu), nm = std::sqrt(nm), na = std::sqrt(na);
    const double want = std::min(nu, nm);
    worst_norm = std::max(worst_norm, std::abs(na - want) / want);
    double dir = 0.0;
    for (int k = 0; k < parts; ++k) dir += (ga[k] / na - gm[k] / nm).squaredNorm();
    worst_dir = std::max(worst_dir, std::sqrt(dir));
  }
  t.line(3, worst_norm <= 1e-12 && worst_dir <= 1e-12, "adaptive clipping exactness",
         "1000 pairs, max rel norm err " + fmt("%.1e", worst_norm) + ", max unit-direction gap " + fmt("%.1e", worst_dir));
}

// 4. DV bound against the Gaussian closed form.
void dv_estimator(Tally& t) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double rho : {0.0, 0.5, 0.9}) {
    const double oracle = -0.5 * std::log(1.0 - rho * rho);
    const Tensor xy = data::sample_gaussian_pair(rho, 10000, 41);
    metrics::MiEstimatorConfig c;
    c.steps = 5000;
    c.seed = 41;
    const auto est = metrics::dv_mi_estimate(xy.col(0), xy.col(1), c);
    const auto running = model::smooth(est.objective, static_cast<std::size_t>(c.smoothing));
    double peak = -1e300;
    for (std::size_t i = static_cast<std::size_t>(c.smoothing) - 1; i < running.size(); ++i) peak = std::max(peak, running[i]);
    ok &= std::abs(est.value - oracle) <= 0.15 && peak <= oracle + 0.15;
    detail += "rho " + fmt("%.1f", rho) + ": " + fmt("%.4f", est.value) + " vs " + fmt("%.4f", oracle) +
              " (running max " + fmt("%.4f", peak) + "); ";
  }
  const double el = seconds_since(t0);
  t.line(4, ok && el < 180.0, "DV estimator vs closed form", detail + fmt("%.0f", el) + " s");
}

// 5. Constant critic.
void dv_identity(Tally& t) {
  model::FdenModel m{model::FdenArch{}};
  ad::Parameter* bias = nullptr;
  for (Mlp* net : m.networks()) {
    if (net->name() == "fden.stat") bias = &net->layers().back().bias;
  }
  if (bias == nullptr) {
    t.line(5, false, "DV identity", "statisticians network not found");
    return;
  }
  Rng rng(505);
  bool ok = true;
  double worst = 0.0;
  for (double c : {0.0, 1.0, -2.5, 37.0}) {
    bias->value(0, 0) = c;
    model::FactorSet fs;
    for (int k = 0; k <= m.n_factors(); ++k) fs.factors.push_back(testing::random_tensor(16, m.dim(), rng));
    for (auto mode : {model::MarginalMode::one_vs_all, model::MarginalMode::full_shuffle}) {
      const auto tb = model::tc_batches(fs, mode, rng());
      Tensor marg(static_cast<Eigen::Index>(16 * tb.marginals.size()), tb.joint.cols());
      for (std::size_t b = 0; b < tb.marginals.size(); ++b) marg.middleRows(static_cast<Eigen::Index>(16 * b), 16) = tb.marginals[b];
      const double direct = model::loss_lm(m.statnet_network().infer(tb.joint), m.statnet_network().infer(marg));

      Rng plan_rng(rng());
      const auto plan = model::make_tc_plan(16, m.n_factors(), mode, plan_rng);
      ad::Tape tape;
      std::vector<ad::Var> leaves;
      for (const auto& f : fs.factors) leaves.push_back(tape.constant(f));
      ad::Var stat = m.statnet(tape, model::tc_stat_input(leaves, plan), Mode::eval, nullptr);
      const Eigen::Index joint_rows = 16;
      ad::Var lm = model::loss_lm(ad::slice_rows(stat, 0, joint_rows),
                                  ad::slice_rows(stat, joint_rows, stat.value().rows() - joint_rows));
      const double traced = lm.value()(0, 0);
      ok &= direct == 0.0 && traced == 0.0;
      worst = std::max({worst, std::abs(direct), std::abs(traced)});
    }
  }
  t.line(5, ok, "DV identity", "constant critic, max |L_M| " + fmt("%.1e", worst));
}

std::vector<Labels> grid(const std::vector<int>& levels, int reps = 1) {
  std::size_t n = static_cast<std::size_t>(reps);
  for (int l : levels) n *= static_cast<std::size_t>(l);
  std::vector<Labels> cols(levels.size(), Labels(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = i / static_cast<std::size_t>(reps);
    for (std::size_t k = levels.size(); k-- > 0;) {
      cols[k][i] = static_cast<int>(r % static_cast<std::size_t>(levels[k]));
      r /= static_cast<std::size_t>(levels[k]);
    }
  }
  return cols;
}

metrics::CodeFactorMatrix copies(const std::vector<Labels>& f) {
  metrics::CodeFactorMatrix cf;
  cf.factors = f;
  cf.codes.resize(static_cast<Eigen::Index>(f[0].size()), static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) {
    for (std::size_t i = 0; i < f[k].size(); ++i) cf.codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f[k][i];
  }
  return cf;
}

metrics::CodeFactorMatrix noise(const std::vector<Labels>& f, int units, std::uint64_t seed) {
  metrics::CodeFactorMatrix cf;
  cf.factors = f;
  Rng rng(seed);
  std::normal_distribution<double> n01;
  cf.codes.resize(static_cast<Eigen::Index>(f[0].size()), units);
  for (Eigen::Index i = 0; i < cf.codes.size(); ++i) cf.codes.data()[i] = n01(rng);
  return cf;
}

// 12. Metric oracles.
void metric_oracles(Tally& t) {
  const auto f = grid({10, 10, 3, 2});
  const auto fr = grid({10, 10, 3, 2}, 10);
  const auto perfect = copies(f);
  const auto pure = noise(fr, 8, 1212);
  metrics::VoteConfig vc;
  vc.seed = 1212;
  const double chance_votes = 1.0 / static_cast<double>(f.size());

  const double mig_p = metrics::mig(perfect), mig_n = metrics::mig(pure);
  const double fvm_p = metrics::factor_vae_metric(perfect, vc), fvm_n = metrics::factor_vae_metric(pure, vc);
  const double bvm_p = metrics::beta_vae_metric(perfect, vc), bvm_n = metrics::beta_vae_metric(pure, vc);
  const auto dci_p = metrics::dci(perfect), dci_n = metrics::dci(pure);

  Labels x, y;
  const int counts[2][2] = {{4, 1}, {1, 4}};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int c = 0; c < counts[i][j]; ++c) x.push_back(i), y.push_back(j);
    }
  }
  const double table = metrics::discrete_mi(x, y);
  const double table_oracle = 2 * 0.4 * std::log(0.4 / 0.25) + 2 * 0.1 * std::log(0.1 / 0.25);

  const bool ok = std::abs(mig_p - 1) <= 1e-6 && std::abs(fvm_p - 1) <= 1e-6 && std::abs(bvm_p - 1) <= 1e-6 &&
                  std::abs(dci_p.disentanglement - 1) <= 1e-6 && std::abs(dci_p.completeness - 1) <= 1e-6 &&
                  mig_n <= 0.05 && fvm_n <= chance_votes + 0.05 && bvm_n <= chance_votes + 0.05 &&
                  dci_n.disentanglement <= 0.05 && std::abs(table - 0.1928) <= 1e-4 &&
                  std::abs(table - table_oracle) <= 1e-12;
  t.line(12, ok, "metric oracles",
         "perfect MIG/FVM/BVM/DCI-D " + fmt("%.6f", mig_p) + "/" + fmt("%.6f", fvm_p) + "/" + fmt("%.6f", bvm_p) + "/" +
             fmt("%.6f", dci_p.disentanglement) + "; noise " + fmt("%.3f", mig_n) + "/" + fmt("%.3f", fvm_n) + "/" +
             fmt("%.3f", bvm_n) + "/" + fmt("%.3f", dci_n.disentanglement) + " (vote chance " +
             fmt("%.2f", chance_votes) + "); table MI " + fmt("%.6f", table));
}

struct Runner {
  fs::path root;
  fs::path config;

  int cli(const std::vector<std::string>& args) {
    std::vector<std::string> a = {"fden"};
    a.insert(a.end(), args.begin(), args.end());
    // Keep the criterion lines alone on stdout.
    std::ofstream log(root / "cli.log", std::ios::app);
    auto* saved = std::cout.rdbuf(log.rdbuf());
    const int code = cli::run(a);
    std::cout.rdbuf(saved);
    return code;
  }

  std::vector<std::string> base(const fs::path& dir, std::vector<std::string> extra = {}) const {
    std::vector<std::string> a = {"--config", config.string(), "--out", dir.string()};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }

  fs::path run_dir(const std::string& name) const { return root / name; }
};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Own pixel-error loop over the full dataset.
double mean_pixel_error(const Tensor& x, const Tensor& xh) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double d = x(i, j) - xh(i, j);
      s += d * d;
    }
  }
  return s / static_cast<double>(x.size());
}

void trained_criteria(Tally& t, Runner& r) {
  const fs::path host_dir = r.run_dir("host");
  const fs::path main = r.run_dir("main");
  const fs::path ablation = r.run_dir("ablation");
  for (const auto& d : {host_dir, main, ablation}) fs::remove_all(d);

  if (r.cli(cat({"train-host"}, r.base(host_dir))) != 0) {
    for (int id : {6, 7, 8, 9, 10, 11}) t.line(id, false, "training run", "host training failed");
    return;
  }
  for (const auto& d : {main, ablation}) {
    fs::create_directories(d);
    fs::copy_file(host_dir / "host.fden", d / "host.fden");
  }
  const std::string host_file_digest = sha256_file(main / "host.fden");
  const std::string host_before = host::load_host_checkpoint(main / "host.fden").checksum();

  const auto t0 = Clock::now();
  const int train_code = r.cli(cat({"train-fden"}, r.base(main, {"--grl", "on"})));
  const double train_seconds = seconds_since(t0);
  const int eval_code = train_code == 0 ? r.cli(cat({"eval-disent"}, r.base(main))) : 1;
  const int shot_code = train_code == 0 ? r.cli(cat({"eval-fewshot"}, r.base(main))) : 1;
  const int ab_code = r.cli(cat({"train-fden"}, r.base(ablation, {"--beta", "0", "--gamma", "0", "--factorizer", "off"})));
  const int ab_eval = ab_code == 0 ? r.cli(cat({"eval-disent"}, r.base(ablation))) : 1;
  if (train_code == 0) r.cli({"report", "--out", main.string(), "--ablation", ablation.string()});

  if (train_code != 0 || eval_code != 0) {
    for (int id : {6, 7, 8, 9, 10, 11}) t.line(id, false, "training run", "train-fden or eval-disent failed");
  } else {
    const auto train = cli::read_scores(main / "train_scores.csv");
    const auto dis = cli::read_scores(main / "disent_scores.csv");
    const auto v = [](const std::vector<cli::ScoreLine>& rows, const char* k) { return cli::score_value(rows, k); };

    // 6. Curve shape, recomputed from the raw curve.
    const auto curve = model::read_curves_csv(main / "curves.csv");
    std::vector<double> lm;
    for (const auto& s : curve) lm.push_back(s.loss_m);
    const std::size_t window = std::clamp<std::size_t>(lm.size() / 20, 1, 500);
    const auto sm = model::smooth(lm, window);
    const auto top = std::max_element(sm.begin(), sm.end());
    const double peak = *top, last = sm.back();
    const bool rises = top != sm.begin() && peak > sm.front();
    t.line(6, rises && last < 0.2 * peak && train_seconds < 1200.0, "L_M curve rises then falls",
           std::to_string(curve.size()) + " steps, window " + std::to_string(window) + ", start " +
               fmt("%.4f", sm.front()) + ", max " + fmt("%.4f", peak) + " at step " +
               std::to_string(top - sm.begin() + 1) + ", final " + fmt("%.4f", last) + " (" +
               fmt("%.1f%%", 100.0 * last / peak) + " of max), " + fmt("%.0f", train_seconds) + " s");

    // 7. Freeze contract and reconstruction through the frozen decoder.
    const auto h = host::load_host_checkpoint(main / "host.fden");
    const auto m = model::load_fden_checkpoint(main / "fden.fden");
    const auto ds = data::make_dataset();
    const Tensor z = h.encode(ds.images);
    const double host_err = mean_pixel_error(ds.images, h.decode(z));
    const double fden_err = mean_pixel_error(ds.images, h.decode(m.entangle(m.decompose(z))));
    const bool frozen = h.checksum() == host_before && sha256_file(main / "host.fden") == host_file_digest &&
                        v(train, "host_checksum_unchanged") == 1.0;
    t.line(7, frozen && fden_err <= 1.25 * host_err, "plug-in freeze contract",
           std::string("host checksum ") + (frozen ? "unchanged" : "CHANGED") + ", pixel error host " +
               fmt("%.5f", host_err) + " fden " + fmt("%.5f", fden_err) + " ratio " + fmt("%.3f", fden_err / host_err) +
               " (limit 1.25)");

    // 8. Held-out alignment.
    double worst = 1.0;
    std::string accs;
    for (const char* name : data::kAttributeNames) {
      const double a = v(dis, (std::string("head_acc_test_") + name).c_str());
      worst = std::min(worst, a);
      accs += std::string(name) + " " + fmt("%.3f", a) + " ";
    }
    t.line(8, worst >= 0.9, "held-out head accuracy", accs + "(min 0.90)");

    // 9. Independence and MIG direction.
    const double pair = v(dis, "factor_pair_mi_max"), unit = v(dis, "aligned_unit_mi_mean");
    const double mig_f = v(dis, "mig_fden"), mig_z = v(dis, "mig_z");
    t.line(9, pair <= 0.25 * unit && mig_f > mig_z, "factor independence and MIG",
           "max pair MI " + fmt("%.4f", pair) + " vs limit " + fmt("%.4f", 0.25 * unit) + " (0.25 x aligned unit MI " + fmt("%.4f", unit) + ")" +
               "; MIG factor means " + fmt("%.4f", mig_f) + " vs raw z " + fmt("%.4f", mig_z));

    // 10. Swap semantics against the ablation.
    const double changed = v(dis, "swap_shape_changed"), kept = v(dis, "swap_position_preserved");
    const double viol = v(dis, "swap_position_violated");
    if (ab_code != 0 || ab_eval != 0) {
      t.line(10, false, "factor swap semantics", "ablation run failed");
    } else {
      const auto abl = cli::read_scores(ablation / "disent_scores.csv");
      const double ab_viol = v(abl, "swap_position_violated");
      t.line(10, changed >= 0.8 && kept >= 0.8 && ab_viol >= 2.0 * viol && ab_viol > viol, "factor swap semantics",
             "shape changed " + fmt("%.3f", changed) + ", positions kept " + fmt("%.3f", kept) +
                 ", violations " + fmt("%.3f", viol) + " vs ablation " + fmt("%.3f", ab_viol) + " (ablation shape changed " +
                 fmt("%.3f", v(abl, "swap_shape_changed")) + ")");
    }

    // 11. Few-shot.
    if (shot_code != 0) {
      t.line(11, false, "few-shot episodes", "eval-fewshot failed");
    } else {
      const auto shots = cli::read_scores(main / "fewshot_scores.csv");
      const cli::ExperimentConfig cfg = cli::parse_config_file(r.config);
      const std::string key = "fewshot_acc_f" + std::to_string(cfg.fewshot_factor);
      const double acc = v(shots, key.c_str()), chance = 1.0 / cfg.ways;
      t.line(11, acc >= 2.0 * chance, "few-shot episodes",
             std::to_string(cfg.ways) + "-way " + std::to_string(cfg.shots) + "-shot on factor " +
                 std::to_string(cfg.fewshot_factor) + ": " + fmt("%.3f", acc) + " vs 2 x chance " +
                 fmt("%.3f", 2 * chance) + " (raw z " + fmt("%.3f", v(shots, "fewshot_acc_z")) + ")");
    }
  }

}

// 13. Determinism of train-fden and its metric files.
void determinism(Tally& t, Runner& r, int det_steps) {
  const fs::path host_dir = r.run_dir("host");
  const fs::path a = r.run_dir("det_a"), b = r.run_dir("det_b");
  bool same = fs::exists(host_dir / "host.fden");
  std::string detail;
  for (const auto& d : {a, b}) {
    if (!same) break;
    fs::remove_all(d);
    fs::create_directories(d);
    fs::copy_file(host_dir / "host.fden", d / "host.fden");
    const auto args = r.base(d, {"--steps", std::to_string(det_steps)});
    same &= r.cli(cat({"train-fden"}, args)) == 0 && r.cli(cat({"eval-disent"}, args)) == 0;
  }
  if (!same) {
    detail = "a run failed";
  } else {
    for (const char* f : {"fden.fden", "curves.csv", "train_scores.csv", "disent_scores.csv"}) {
      const bool eq = sha256_file(a / f) == sha256_file(b / f);
      same &= eq;
      detail += std::string(f) + (eq ? " same " : " DIFFERS ");
    }
    detail += "at " + std::to_string(det_steps) + " steps, checkpoint " + sha256_file(a / "fden.fden").substr(0, 16);
  }
  t.line(13, same, "determinism", detail);
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"acceptance suite"};
  std::string workdir = "acceptance_runs";
  std::string config = FDEN_ACCEPTANCE_CONFIG;
  int det_steps = 200;
  bool quick = false;
  app.add_option("--workdir", workdir, "scratch directory for run directories")->capture_default_str();
  app.add_option("--config", config, "training config for the trained criteria")->capture_default_str();
  app.add_option("--determinism-steps", det_steps, "steps of each determinism run")->capture_default_str();
  app.add_flag("--quick", quick, "skip the criteria that need a full training run");
  CLI11_PARSE(app, argc, argv);

  Tally t;
  gradient_integrity(t);
  grl_exactness(t);
  clipping_exactness(t);
  dv_estimator(t);
  dv_identity(t);
  if (!quick) {
    Runner r{fs::absolute(workdir), fs::absolute(config)};
    fs::create_directories(r.root);
    trained_criteria(t, r);
    metric_oracles(t);
    determinism(t, r, det_steps);
  } else {
    metric_oracles(t);
  }
  std::printf("acceptance: %d passed, %d failed\n", t.passed, t.failed);
  return t.failed == 0 ? 0 : 1;
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "fden/model/fden.hpp"
#include "fden/model/losses.hpp"
#include "fden/model/manipulate.hpp"
#include "fden/model/trainer.hpp"
#include "gradcheck.hpp"

namespace fden::model {
namespace {

namespace fs = std::filesystem;
using fden::testing::random_tensor;

FdenArch micro_arch(int dim, std::vector<int> classes, int width, double dropout = 0.0) {
  FdenArch a;
  a.dim = dim;
  a.classes = std::move(classes);
  a.dropout = dropout;
  a.widths = FdenWidths::uniform(width);
  return a;
}

FdenModel random_model(const FdenArch& a, std::uint64_t seed, double sigma = 0.3) {
  FdenModel m(a);
  m.initialize(sigma, seed);
  return m;
}

host::LatentDataset synthetic_latents(int n, int dim, const std::vector<int>& classes, std::uint64_t seed) {
  Rng rng(seed);
  host::LatentDataset d;
  d.z = random_tensor(n, dim, rng);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::uniform_int_distribution<int> u(0, classes[k] - 1);
    Labels l(static_cast<std::size_t>(n));
    for (int& y : l) y = u(rng);
    d.labels.emplace_back("attr" + std::to_string(k), std::move(l));
  }
  return d;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

TEST(FdenModel, DefaultLayoutMatchesArchitectureTable) {
  FdenModel m{FdenArch{}};
  EXPECT_EQ(m.n_factors(), 4);
  auto widths = [](const Mlp& net) {
    std::vector<int> w{net.in_dim()};
    for (const auto& l : net.layers()) w.push_back(l.spec.width);
    return w;
  };
  EXPECT_EQ(widths(m.global_decoder()), (std::vector<int>{32, 512, 512, 512, 64}));
  EXPECT_EQ(widths(m.local_decoder(0)), (std::vector<int>{64, 512, 512, 32}));
  EXPECT_EQ(widths(m.stream(4)), (std::vector<int>{32, 256, 256, 32}));
  EXPECT_EQ(widths(m.global_encoder()), (std::vector<int>{160, 512, 512, 512, 32}));
  EXPECT_EQ(widths(m.statnet_network()), (std::vector<int>{160, 1024, 256, 64, 1}));
  EXPECT_EQ(widths(m.head_network(1)), (std::vector<int>{32, 512, 256, 64, 3}));
  EXPECT_EQ(widths(m.head_network(3)), (std::vector<int>{32, 512, 256, 64, 2}));
  EXPECT_THROW(m.head_network(0), std::out_of_range);
  EXPECT_THROW(m.head_network(5), std::out_of_range);
  for (const Mlp* net : m.networks()) {
    ASSERT_FALSE(net->layers().empty());
    EXPECT_TRUE(net->layers().front().bn.has_value());
    for (std::size_t i = 0; i < net->layers().size(); ++i) {
      const auto& l = net->layers()[i];
      EXPECT_DOUBLE_EQ(l.spec.dropout_rate, 0.2);
      if (i > 0) {
        EXPECT_FALSE(l.bn.has_value());
      }
      const bool last = i + 1 == net->layers().size();
      EXPECT_EQ(l.spec.activation, last ? Activation::linear : Activation::leaky_relu);
    }
  }
}

TEST(FdenModel, DecomposeShapesAndZeroModel) {
  FdenModel m{FdenArch{}};
  Rng rng(1);
  const Tensor z = random_tensor(4, 32, rng);
  FactorSet fs = m.decompose(z);
  ASSERT_EQ(fs.count(), 5u);
  for (const Tensor& f : fs.factors) {
    EXPECT_EQ(f.rows(), 4);
    EXPECT_EQ(f.cols(), 32);
    EXPECT_TRUE(f.isZero(0.0));
  }
  const Tensor zt = m.entangle(fs);
  EXPECT_EQ(zt.rows(), 4);
  EXPECT_EQ(zt.cols(), 32);
  EXPECT_TRUE(zt.isZero(0.0));
  EXPECT_THROW(m.decompose(Tensor::Zero(4, 31)), ShapeError);
}

TEST(FdenModel, EvalIsPureAndShapeClosed) {
  const FdenArch a = micro_arch(6, {3, 2}, 8, 0.2);
  FdenModel m = random_model(a, 3);
  Rng rng(2);
  for (int b : {1, 2, 7}) {
    const Tensor z = random_tensor(b, 6, rng);
    const FactorSet f1 = m.decompose(z);
    const FactorSet f2 = m.decompose(z);
    for (std::size_t i = 0; i < f1.count(); ++i) EXPECT_EQ(f1[i], f2[i]);
    const Tensor zt = m.entangle(f1);
    EXPECT_EQ(zt.rows(), z.rows());
    EXPECT_EQ(zt.cols(), z.cols());
  }
}

TEST(FdenModel, EvalTraceMatchesInference) {
  const FdenArch a = micro_arch(5, {2, 2}, 6, 0.2);
  FdenModel m = random_model(a, 4);
  Rng rng(5);
  const Tensor z = random_tensor(3, 5, rng);
  ad::Tape tape;
  auto fv = m.decompose(tape, tape.constant(z), Mode::eval, nullptr);
  const FactorSet fs = m.decompose(z);
  for (std::size_t i = 0; i < fs.count(); ++i) EXPECT_TRUE(fv[i].value().isApprox(fs[i], 1e-14));
  EXPECT_TRUE(m.entangle(tape, fv, Mode::eval, nullptr).value().isApprox(m.entangle(fs), 1e-14));
}

TEST(FdenModel, EntangleRejectsIncompleteOrMismatchedFactors) {
  const FdenArch a = micro_arch(4, {2, 2}, 4);
  FdenModel m = random_model(a, 1);
  Rng rng(2);
  FactorSet fs = m.decompose(random_tensor(3, 4, rng));
  FactorSet missing = fs;
  missing.factors.pop_back();
  EXPECT_THROW(m.entangle(missing), ShapeError);
  FactorSet ragged = fs;
  ragged[1] = Tensor::Zero(2, 4);
  EXPECT_THROW(m.entangle(ragged), ShapeError);
  FactorSet narrow = fs;
  narrow[2] = Tensor::Zero(3, 3);
  EXPECT_THROW(m.entangle(narrow), ShapeError);
  EXPECT_THROW(m.entangle(FactorSet{}), ShapeError);
}

TEST(FdenModel, EntangleIsOrderSensitive) {
  const FdenArch a = micro_arch(4, {2, 2}, 8);
  FdenModel m = random_model(a, 9);
  Rng rng(3);
  FactorSet fs = m.decompose(random_tensor(5, 4, rng));
  FactorSet swapped = fs;
  std::swap(swapped[0], swapped[2]);
  EXPECT_GT((m.entangle(fs) - m.entangle(swapped)).norm(), 1e-6);
}

TEST(FdenModel, InitializationIsSeededAndTruncated) {
  FdenModel a{FdenArch{}}, b{FdenArch{}}, c{FdenArch{}};
  a.initialize(0.001, 7);
  b.initialize(0.001, 7);
  c.initialize(0.001, 8);
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.checksum(), c.checksum());
  for (const ad::Parameter* p : std::as_const(a).networks().front()->parameters()) {
    if (p->name.find("weight") != std::string::npos) {
      EXPECT_LE(p->value.cwiseAbs().maxCoeff(), 0.002);
    } else if (p->name.find(".bias") != std::string::npos) {
      EXPECT_TRUE(p->value.isZero(0.0));
    }
  }
}

TEST(FdenCheckpoint, RoundTripPreservesChecksumAndOutputs) {
  const FdenArch a = micro_arch(4, {3, 2}, 5, 0.1);
  FdenModel m = random_model(a, 11);
  m.round_to_f32();
  const fs::path p = fs::temp_directory_path() / "fden_test_model.fden";
  save_checkpoint(m, p);
  FdenModel back = load_fden_checkpoint(p);
  EXPECT_EQ(back.checksum(), m.checksum());
  EXPECT_EQ(back.arch().classes, a.classes);
  EXPECT_DOUBLE_EQ(back.arch().dropout, 0.1);
  Rng rng(1);
  const Tensor z = random_tensor(3, 4, rng);
  EXPECT_EQ(back.entangle(back.decompose(z)), m.entangle(m.decompose(z)));
  EXPECT_THROW(host::load_host_checkpoint(p), FormatError);
}

TEST(TcBatches, PermutationSemantics) {
  FactorSet fs;
  Tensor f0(3, 1), f1(3, 1);
  f0 << 10, 11, 12;
  f1 << 0, 1, 2;  // rows a, b, c
  fs.factors = {f0, f1};
  TcPlan plan;
  plan.batch = 3;
  plan.perms = {{{}, {2, 0, 1}}};
  const TcBatches tb = tc_batches(fs, plan);
  ASSERT_EQ(tb.marginals.size(), 1u);
  EXPECT_EQ(tb.marginals[0].col(1), (Tensor(3, 1) << 2, 0, 1).finished());
  EXPECT_EQ(tb.marginals[0].col(0), f0);
}

TEST(TcBatches, OneVsAllShufflesOneFactorPerBatch) {
  Rng rng(4);
  FactorSet fs;
  for (int k = 0; k < 5; ++k) fs.factors.push_back(random_tensor(16, 3, rng));
  const TcBatches tb = tc_batches(fs, MarginalMode::one_vs_all, 21);
  EXPECT_EQ(tb.joint, fs.concat());
  ASSERT_EQ(tb.marginals.size(), 4u);
  for (std::size_t m = 0; m < 4; ++m) {
    for (std::size_t k = 0; k < 5; ++k) {
      const Tensor got = tb.marginals[m].middleCols(static_cast<Eigen::Index>(k) * 3, 3);
      if (k != m + 1) {
        EXPECT_EQ(got, fs[k]);
        continue;
      }
      // Same multiset of rows.
      auto sorted = [](const Tensor& t) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index r = 0; r < t.rows(); ++r) rows.emplace_back(t.row(r).data(), t.row(r).data() + t.cols());
        std::sort(rows.begin(), rows.end());
        return rows;
      };
      EXPECT_EQ(sorted(got), sorted(fs[k]));
      EXPECT_NE(got, fs[k]);
    }
  }
}

TEST(TcBatches, FullShuffleLeavesOnlyFirstFactor) {
  Rng rng(5);
  FactorSet fs;
  for (int k = 0; k < 4; ++k) fs.factors.push_back(random_tensor(20, 2, rng));
  const TcBatches tb = tc_batches(fs, MarginalMode::full_shuffle, 3);
  ASSERT_EQ(tb.marginals.size(), 1u);
  EXPECT_EQ(tb.marginals[0].leftCols(2), fs[0]);
  for (int k = 1; k < 4; ++k) EXPECT_NE(tb.marginals[0].middleCols(2 * k, 2), fs[static_cast<std::size_t>(k)]);
}

TEST(TcBatches, RejectsBatchOfOne) {
  FactorSet fs;
  fs.factors = {Tensor::Zero(1, 2), Tensor::Zero(1, 2)};
  EXPECT_THROW(tc_batches(fs, MarginalMode::one_vs_all, 1), std::invalid_argument);
  Rng rng(1);
  EXPECT_THROW(make_tc_plan(1, 3, MarginalMode::full_shuffle, rng), std::invalid_argument);
}

TEST(TcBatches, TraceInputStacksJointThenMarginals) {
  Rng rng(6);
  FactorSet fs;
  for (int k = 0; k < 3; ++k) fs.factors.push_back(random_tensor(6, 2, rng));
  Rng prng(8);
  const TcPlan plan = make_tc_plan(6, 2, MarginalMode::one_vs_all, prng);
  const TcBatches tb = tc_batches(fs, plan);
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& f : fs.factors) vars.push_back(tape.constant(f));
  const Tensor stacked = tc_stat_input(vars, plan).value();
  ASSERT_EQ(stacked.rows(), 18);
  EXPECT_EQ(stacked.topRows(6), tb.joint);
  EXPECT_EQ(stacked.middleRows(6, 6), tb.marginals[0]);
  EXPECT_EQ(stacked.bottomRows(6), tb.marginals[1]);
}

TEST(LossLm, ConstantStatnetGivesExactlyZero) {
  for (double c : {0.0, 1.5, -3.25, 40.0}) {
    EXPECT_EQ(loss_lm(Tensor::Constant(16, 1, c), Tensor::Constant(64, 1, c)), 0.0);
  }
  // Through the statisticians network itself: zero weights, output bias c.
  FdenModel m{micro_arch(3, {2, 2}, 4)};
  Mlp* found = nullptr;
  for (Mlp* net : m.networks()) {
    if (net->name() == "fden.stat") found = net;
  }
  ASSERT_NE(found, nullptr);
  Mlp& stat = *found;
  stat.layers().back().bias.value(0, 0) = 2.75;
  FactorSet fs;
  Rng rng(3);
  for (int k = 0; k < 3; ++k) fs.factors.push_back(random_tensor(8, 3, rng));
  const TcBatches tb = tc_batches(fs, MarginalMode::one_vs_all, 2);
  Tensor marg(16, 9);
  marg << tb.marginals[0], tb.marginals[1];
  EXPECT_EQ(loss_lm(stat.infer(tb.joint), stat.infer(marg)), 0.0);
}

TEST(LossLm, DirectEvaluation) {
  EXPECT_DOUBLE_EQ(loss_lm(Tensor::Constant(1, 1, 2.0), Tensor::Constant(1, 1, 0.0)), 2.0);
  Tensor tm(2, 1);
  tm << 0.0, std::log(3.0);
  EXPECT_NEAR(loss_lm(Tensor::Constant(1, 1, 1.0), tm), 1.0 - std::log(2.0), 1e-15);
  // Large outputs stay finite.
  EXPECT_NEAR(loss_lm(Tensor::Constant(1, 1, 900.0), Tensor::Constant(3, 1, 900.0)), 0.0, 1e-12);
}

TEST(LossLm, JointAsItsOwnMarginalIsAtMostZero) {
  FdenModel m = random_model(micro_arch(3, {2, 2}, 6), 5, 1.0);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor joint = random_tensor(32, 9, rng);
    const Tensor t = m.statnet_network().infer(joint);
    EXPECT_LE(loss_lm(t, t), 1e-12);
  }
}

TEST(LossLm, TraceMatchesTensorValue) {
  Rng rng(2);
  const Tensor a = random_tensor(5, 1, rng), b = random_tensor(20, 1, rng);
  ad::Tape tape;
  EXPECT_NEAR(loss_lm(tape.constant(a), tape.constant(b)).value()(0, 0), loss_lm(a, b), 1e-14);
}

TEST(LossLr, Examples) {
  Tensor z(1, 2);
  z << 1, 1;
  EXPECT_EQ(loss_lr(z, z, &z, &z, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(loss_lr(z, Tensor::Zero(1, 2), nullptr, nullptr, 0.0), 2.0);
  Tensor x(1, 4);
  x << 1, 1, 1, 1;
  const Tensor x0 = Tensor::Zero(1, 4);
  EXPECT_DOUBLE_EQ(loss_lr(z, Tensor::Zero(1, 2), &x, &x0, 0.5), 4.0);
  // Absent inputs drop the second term.
  EXPECT_DOUBLE_EQ(loss_lr(z, Tensor::Zero(1, 2), nullptr, nullptr, 0.5), 2.0);
  EXPECT_THROW(loss_lr(z, Tensor::Zero(1, 3), nullptr, nullptr, 0.0), ShapeError);
}

TEST(LossLr, TraceMatchesTensorValue) {
  Rng rng(4);
  const Tensor z = random_tensor(3, 2, rng), zt = random_tensor(3, 2, rng);
  const Tensor x = random_tensor(3, 5, rng), xt = random_tensor(3, 5, rng);
  ad::Tape tape;
  const double v = loss_lr(tape.constant(z), tape.constant(zt), tape.constant(x), tape.constant(xt), 0.5)
                       .value()(0, 0);
  EXPECT_NEAR(v, loss_lr(z, zt, &x, &xt, 0.5), 1e-14);
}

TEST(LossLc, Examples) {
  EXPECT_NEAR(loss_lc({Tensor::Zero(4, 3)}, {{0, 1, 2, 1}}), std::log(3.0), 1e-15);
  Tensor sure(2, 3);
  sure << 100, 0, 0, 0, 0, 100;
  EXPECT_NEAR(loss_lc({sure}, {{0, 2}}), 0.0, 1e-40);
  // Two binary heads with CE 1 and 3: logits (0, a) with label 0 give log(1 + e^a).
  auto head = [](double ce) {
    Tensor t(1, 2);
    t << 0.0, std::log(std::exp(ce) - 1.0);
    return t;
  };
  EXPECT_NEAR(loss_lc({head(1.0), head(3.0)}, {{0}, {0}}), 2.0, 1e-12);
  EXPECT_THROW(loss_lc({Tensor::Zero(2, 3)}, {{0, 3}}), std::out_of_range);
  EXPECT_THROW(loss_lc({Tensor::Zero(2, 3)}, {}), std::invalid_argument);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

// Finite-difference oracle for L_M on a fixed batch and shuffle plan.
struct LmOracle {
  FdenModel& model;
  const Tensor& z;
  const std::vector<Labels>& labels;
  const TrainConfig& config;
  const TcPlan& plan;

  double lm() const {
    ad::Tape tape;
    DropoutStreams rng(0);
    return build_objectives(tape, model, nullptr, z, nullptr, labels, config, &plan, rng).loss_m->value()(0, 0);
  }

  std::vector<Tensor> gradient(const std::vector<ad::Parameter*>& ps) const {
    std::vector<Tensor> out;
    for (ad::Parameter* p : ps) {
      Tensor g(p->value.rows(), p->value.cols());
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        double& w = p->value.data()[i];
        const double orig = w;
        w = orig + 1e-6;
        const double up = lm();
        w = orig - 1e-6;
        const double down = lm();
        w = orig;
        g.data()[i] = (up - down) / 2e-6;
      }
      out.push_back(g);
    }
    return out;
  }
};

double dot(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

double max_abs_diff(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

std::vector<Tensor> grads(const std::vector<ad::Parameter*>& ps) {
  std::vector<Tensor> out;
  for (const ad::Parameter* p : ps) out.push_back(p->grad);
  return out;
}

struct MicroSetup {
  FdenArch arch = micro_arch(2, {2, 2}, 2);
  host::LatentDataset data = synthetic_latents(12, 2, {2, 2}, 5);
  std::vector<std::size_t> rows = iota_rows(8);
  Tensor z;
  std::vector<Labels> labels;

  MicroSetup() {
    z = data.z.topRows(8);
    for (const auto& [name, l] : data.labels) labels.emplace_back(l.begin(), l.begin() + 8);
  }
};

TEST(TrainStep, SignsMatchFiniteDifferenceOracleWithReversal) {
  MicroSetup s;
  FdenModel m = random_model(s.arch, 13, 0.8);
  TrainConfig c;
  c.batch = 8;
  c.gamma = 0.5;
  Rng prng(3);
  const TcPlan plan = make_tc_plan(8, 2, MarginalMode::one_vs_all, prng);
  Trainer t(m, nullptr, s.data, s.rows, c);
  const StepGradients g = t.compute_gradients(s.rows, &plan);

  LmOracle oracle{m, s.z, s.labels, c, plan};
  const std::vector<Tensor> d_xi = oracle.gradient(m.statnet_parameters());
  const std::vector<Tensor> d_theta = oracle.gradient(m.decomposer_parameters());
  ASSERT_GT(global_norm(d_xi), 1e-6);
  ASSERT_GT(global_norm(d_theta), 1e-6);

  // Statnet side: the applied gradient is -gamma dL_M/dxi, so descent ascends L_M.
  std::vector<Tensor> want_xi;
  for (const Tensor& d : d_xi) want_xi.push_back(-c.gamma * d);
  EXPECT_LT(max_abs_diff(grads(m.statnet_parameters()), want_xi), 1e-7 * std::max(1.0, global_norm(want_xi)));
  // Decomposer side: the L_M pass hands back +gamma dL_M/dtheta through the reversal.
  std::vector<Tensor> want_m;
  for (const Tensor& d : d_theta) want_m.push_back(c.gamma * d);
  EXPECT_LT(max_abs_diff(g.g_m, want_m), 1e-7 * std::max(1.0, global_norm(want_m)));

  // Moving the statnet along its descent direction raises the estimate.
  const double before = oracle.lm();
  std::vector<Tensor> saved;
  for (ad::Parameter* p : m.statnet_parameters()) saved.push_back(p->value);
  for (ad::Parameter* p : m.statnet_parameters()) p->value -= 1e-3 * p->grad;
  EXPECT_GT(oracle.lm(), before);
  auto sp = m.statnet_parameters();
  for (std::size_t i = 0; i < sp.size(); ++i) sp[i]->value = saved[i];

  // The L_M part of the applied decomposer update opposes dL_M/dtheta.
  std::vector<Tensor> applied_m;
  auto tp = m.decomposer_parameters();
  for (std::size_t i = 0; i < tp.size(); ++i) applied_m.push_back(tp[i]->grad - g.g_u[i]);
  EXPECT_GT(dot(applied_m, d_theta), 0.0);
  for (std::size_t i = 0; i < tp.size(); ++i) tp[i]->value -= 1e-3 * applied_m[i];
  EXPECT_LT(oracle.lm(), before);
}

TEST(TrainStep, TwoPhaseScheduleWithoutReversal) {
  MicroSetup s;
  FdenModel m = random_model(s.arch, 17, 0.8);
  TrainConfig c;
  c.batch = 8;
  c.grl = false;
  c.phase_switch = 1;
  Rng prng(9);
  const TcPlan plan = make_tc_plan(8, 2, MarginalMode::one_vs_all, prng);
  Trainer t(m, nullptr, s.data, s.rows, c);
  EXPECT_EQ(t.phase_for(1), 1);
  EXPECT_EQ(t.phase_for(2), 2);
  LmOracle oracle{m, s.z, s.labels, c, plan};
  const std::vector<Tensor> d_theta = oracle.gradient(m.decomposer_parameters());

  // Phase 1: every part ascends L_M, so the decomposer receives -gamma dL_M/dtheta.
  StepGradients g1 = t.compute_gradients(s.rows, &plan);
  EXPECT_EQ(g1.metrics.phase, 1);
  std::vector<Tensor> want;
  for (const Tensor& d : d_theta) want.push_back(-c.gamma * d);
  EXPECT_LT(max_abs_diff(g1.g_m, want), 1e-7 * std::max(1.0, global_norm(want)));
  EXPECT_NEAR(g1.metrics.loss_total, g1.metrics.loss_r + g1.metrics.loss_c - c.gamma * g1.metrics.loss_m, 1e-12);

  t.train_step(s.rows);
  StepGradients g2 = t.compute_gradients(s.rows, &plan);
  EXPECT_EQ(g2.metrics.phase, 2);
  EXPECT_NEAR(g2.metrics.loss_total, g2.metrics.loss_r + g2.metrics.loss_c + c.gamma * g2.metrics.loss_m, 1e-12);
  const std::vector<Tensor> d2 = oracle.gradient(m.decomposer_parameters());
  std::vector<Tensor> want2;
  for (const Tensor& d : d2) want2.push_back(c.gamma * d);
  EXPECT_LT(max_abs_diff(g2.g_m, want2), 1e-7 * std::max(1.0, global_norm(want2)));
}

TEST(TrainStep, ClippingCapsTheStatisticsContribution) {
  MicroSetup s;
  for (double gamma : {1e-6, 0.5, 1e6}) {
    FdenModel m = random_model(s.arch, 19, 0.8);
    TrainConfig c;
    c.batch = 8;
    c.gamma = gamma;
    Trainer t(m, nullptr, s.data, s.rows, c);
    const StepGradients g = t.compute_gradients(s.rows);
    auto tp = m.decomposer_parameters();
    std::vector<Tensor> applied_m;
    for (std::size_t i = 0; i < tp.size(); ++i) applied_m.push_back(tp[i]->grad - g.g_u[i]);
    const double nu = global_norm(g.g_u), nm = global_norm(g.g_m);
    EXPECT_NEAR(global_norm(applied_m), std::min(nu, nm), 1e-9 * std::max(nu, 1.0));
    if (nm > nu) {
      EXPECT_NEAR(global_norm(applied_m), nu, 1e-9 * nu);
    }
    EXPECT_NEAR(dot(applied_m, g.g_m), global_norm(applied_m) * nm, 1e-9 * std::max(1.0, nm * nu));
    EXPECT_DOUBLE_EQ(g.metrics.grad_norm_u, nu);
    EXPECT_DOUBLE_EQ(g.metrics.grad_norm_m, nm);
  }
}

TEST(TrainStep, WithoutFactorizerWeightsMatchesPlainAutoencoder) {
  const FdenArch a = micro_arch(3, {2, 3}, 6, 0.2);
  const host::LatentDataset data = synthetic_latents(30, 3, {2, 3}, 8);
  FdenModel on = random_model(a, 23);
  FdenModel off = random_model(a, 23);
  TrainConfig c;
  c.batch = 6;
  c.beta = 0.0;
  c.gamma = 0.0;
  TrainConfig c_off = c;
  c_off.factorizer = false;
  train(on, nullptr, data, iota_rows(30), [&] { auto x = c; x.steps = 5; return x; }());
  train(off, nullptr, data, iota_rows(30), [&] { auto x = c_off; x.steps = 5; return x; }());
  auto pa = on.decomposer_parameters(), pb = off.decomposer_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
  pa = on.entangler_parameters();
  pb = off.entangler_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(TrainStep, DeterministicAndSeedSensitive) {
  const FdenArch a = micro_arch(3, {2, 2}, 5, 0.2);
  const host::LatentDataset data = synthetic_latents(40, 3, {2, 2}, 2);
  auto run = [&](std::uint64_t seed) {
    FdenModel m = random_model(a, 1);
    TrainConfig c;
    c.batch = 8;
    c.steps = 6;
    c.seed = seed;
    train(m, nullptr, data, iota_rows(40), c);
    return m.checksum();
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7), run(8));
}

TEST(TrainStep, HostUntouchedAndInputTermUsed) {
  const data::ShapeDataset ds = data::make_dataset();
  host::HostConfig hc;
  hc.dim = 4;
  hc.steps = 30;
  const host::HostModel h = host::train_host(ds, hc, 3);
  const std::string before = h.checksum();
  host::LatentDataset lat = host::encode_dataset(h, ds);
  FdenModel m = random_model(micro_arch(4, {3, 3, 2, 2}, 8), 5, 0.1);
  TrainConfig c;
  c.steps = 4;
  std::vector<StepMetrics> with_x = train(m, &h, lat, iota_rows(900), c);
  EXPECT_EQ(h.checksum(), before);

  FdenModel m2 = random_model(micro_arch(4, {3, 3, 2, 2}, 8), 5, 0.1);
  c.lambda = 0.0;
  std::vector<StepMetrics> without = train(m2, &h, lat, iota_rows(900), c);
  EXPECT_GT(with_x.front().loss_r, without.front().loss_r);
  EXPECT_EQ(h.checksum(), before);
}

TEST(Train, ZeroStepsKeepsInitialization) {
  const FdenArch a = micro_arch(3, {2}, 4);
  FdenModel m = random_model(a, 3);
  const std::string init = m.checksum();
  TrainConfig c;
  c.batch = 4;
  c.steps = 0;
  EXPECT_TRUE(train(m, nullptr, synthetic_latents(10, 3, {2}, 1), iota_rows(10), c).empty());
  EXPECT_EQ(m.checksum(), init);
}

TEST(Train, CurvesCsvContract) {
  const FdenArch a = micro_arch(3, {2, 2}, 4);
  FdenModel m = random_model(a, 3);
  TrainConfig c;
  c.batch = 4;
  c.steps = 9;
  const auto curve = train(m, nullptr, synthetic_latents(20, 3, {2, 2}, 1), iota_rows(20), c);
  ASSERT_EQ(curve.size(), 9u);
  const fs::path p = fs::temp_directory_path() / "fden_test_curves.csv";
  write_curves_csv(curve, p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,loss_total,loss_r,loss_c,loss_m,grad_norm_u,grad_norm_m");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 9);
  const auto back = read_curves_csv(p);
  ASSERT_EQ(back.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(back[i].step, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(back[i].loss_m, curve[i].loss_m);
    EXPECT_EQ(back[i].grad_norm_u, curve[i].grad_norm_u);
  }
}

TEST(Train, AutoencoderModeSmoothedReconstructionDecreases) {
  const data::ShapeDataset ds = data::make_dataset();
  host::HostConfig hc;
  hc.dim = 8;
  hc.steps = 300;
  const host::HostModel h = host::train_host(ds, hc, 1);
  const host::LatentDataset lat = host::encode_dataset(h, ds);
  // Narrow layers lose the signal under the full-size init scale.
  FdenModel m{micro_arch(8, {3, 3, 2, 2}, 32)};
  m.initialize(0.05, 7);
  TrainConfig c;
  c.beta = 0.0;
  c.gamma = 0.0;
  c.factorizer = false;
  c.steps = 2500;
  c.batch = 64;
  c.adam.lr = 1e-3;
  const auto curve = train(m, &h, lat, iota_rows(900), c);
  std::vector<double> window_means;
  for (std::size_t w = 0; w < curve.size() / 500; ++w) {
    double s = 0;
    for (std::size_t i = w * 500; i < (w + 1) * 500; ++i) s += curve[i].loss_r;
    window_means.push_back(s / 500);
  }
  for (std::size_t w = 1; w < window_means.size(); ++w) EXPECT_LT(window_means[w], window_means[w - 1]) << w;
}

TEST(Manipulate, InterpolateExamples) {
  FactorSet a, b;
  a.factors = {Tensor::Constant(1, 1, 2.0), Tensor::Constant(1, 1, 5.0)};
  b.factors = {Tensor::Constant(1, 1, 0.0), Tensor::Constant(1, 1, 1.0)};
  const std::vector<bool> mask{true, false};
  EXPECT_EQ(factor_interpolate(a, b, 1.0, mask)[0](0, 0), 2.0);
  EXPECT_EQ(factor_interpolate(a, b, 0.0, mask)[0](0, 0), 0.0);
  const FactorSet mid = factor_interpolate(a, b, 0.5, mask);
  EXPECT_EQ(mid[0](0, 0), 1.0);
  EXPECT_EQ(mid[1](0, 0), 5.0);
  EXPECT_THROW(factor_interpolate(a, b, 1.5, mask), std::invalid_argument);
  EXPECT_THROW(factor_interpolate(a, b, -0.1, mask), std::invalid_argument);
  EXPECT_THROW(factor_interpolate(a, b, 0.5, {true}), ShapeError);
}

TEST(Manipulate, SwapExchangesOneFactor) {
  FactorSet a, b;
  a.factors = {Tensor::Constant(1, 2, 1.0), Tensor::Constant(1, 2, 2.0)};
  b.factors = {Tensor::Constant(1, 2, 3.0), Tensor::Constant(1, 2, 4.0)};
  auto [a2, b2] = factor_swap(a, b, 1);
  EXPECT_EQ(a2[0], a[0]);
  EXPECT_EQ(a2[1], b[1]);
  EXPECT_EQ(b2[1], a[1]);
  EXPECT_THROW(factor_swap(a, b, 2), std::out_of_range);
}

TEST(Manipulate, TransferMeanExamples) {
  FactorSet all;
  Tensor f0(3, 2), f1(3, 2);
  f0 << 9, 9, 8, 8, 7, 7;
  f1 << 0, 2, 2, 0, 5, 5;
  all.factors = {f0, f1};
  const Labels labels{1, 1, 0};
  const FactorSet two = factor_transfer_mean(all, labels, 2, 1, 1);
  EXPECT_EQ(two[1], (Tensor(1, 2) << 1, 1).finished());
  EXPECT_EQ(two[0], f0.row(2));
  const FactorSet single = factor_transfer_mean(all, labels, 0, 1, 0);
  EXPECT_EQ(single[1], f1.row(2));
  EXPECT_THROW(factor_transfer_mean(all, labels, 0, 1, 2), std::invalid_argument);
}

TEST(Manipulate, TransferMeanThroughModel) {
  const FdenArch a = micro_arch(3, {2}, 4);
  FdenModel m = random_model(a, 2);
  const host::LatentDataset d = synthetic_latents(10, 3, {2}, 4);
  const FactorSet all = m.decompose(d.z);
  const FactorSet got = factor_transfer_mean(m, d, 3, 1, 1);
  const FactorSet want = factor_transfer_mean(all, d.labels[0].second, 3, 1, 1);
  EXPECT_EQ(got[1], want[1]);
  EXPECT_THROW(factor_transfer_mean(m, d, 3, 0, 1), std::out_of_range);
}

}  // namespace
}  // namespace fden::model

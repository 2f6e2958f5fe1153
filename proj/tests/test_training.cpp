#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "agcn/checkpoint.hpp"
#include "agcn/error.hpp"
#include "agcn/tensor_io.hpp"
#include "agcn/train.hpp"
#include "test_util.hpp"

using namespace agcn;
using agcn::testing::random_tensor;

namespace {

ParamRegistry one_weight(double w, double g) {
  ParamRegistry reg;
  Parameter& p = reg.add("w", Tensor({1}, w));
  p.grad = Tensor({1}, g);
  return reg;
}

Dataset small_visual(std::size_t n, std::uint64_t seed) { return synth_dataset(SynthKind::visual, 4, n, seed); }

AgcnConfig quick(int epochs) {
  AgcnConfig c = AgcnConfig::tiny_visual(4);
  c.train.epochs = epochs;
  return c;
}

// Softmax regression on raw pixels, full-batch gradient descent.
double linear_pixel_baseline(const Dataset& tr, const Dataset& te, int iters) {
  const std::size_t d = tr.samples[0].input.numel() + 1, k = static_cast<std::size_t>(tr.num_classes);
  std::vector<double> w(k * d, 0.0);
  auto scores = [&](const Tensor& x, std::vector<double>& s) {
    for (std::size_t c = 0; c < k; ++c) {
      double z = w[c * d + d - 1];
      for (std::size_t i = 0; i + 1 < d; ++i) z += w[c * d + i] * x[i];
      s[c] = z;
    }
  };
  // Step 1/mean|x|^2 keeps gradient descent below the curvature limit.
  double sq = 0.0;
  for (const auto& smp : tr.samples)
    for (double v : smp.input.data()) sq += v * v;
  const double step = static_cast<double>(tr.size()) / (sq + static_cast<double>(tr.size()));
  std::vector<double> s(k), grad(k * d);
  for (int it = 0; it < iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& smp : tr.samples) {
      scores(smp.input, s);
      const double m = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& v : s) z += (v = std::exp(v - m));
      for (std::size_t c = 0; c < k; ++c) {
        const double r = s[c] / z - (static_cast<int>(c) == smp.label ? 1.0 : 0.0);
        for (std::size_t i = 0; i + 1 < d; ++i) grad[c * d + i] += r * smp.input[i];
        grad[c * d + d - 1] += r;
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * grad[i] / static_cast<double>(tr.size());
  }
  std::size_t correct = 0;
  for (const auto& smp : te.samples) {
    scores(smp.input, s);
    if (static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()) == smp.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(te.size());
}

}  // namespace

TEST(Sgd, VanillaStep) {
  ParamRegistry reg = one_weight(1.0, 0.5);
  SgdMomentum sgd(0.0);
  sgd.step(reg, 0.1);
  EXPECT_DOUBLE_EQ(reg.at("w").value[0], 0.95);
}

TEST(Sgd, MomentumRecurrence) {
  ParamRegistry reg = one_weight(0.0, 2.0);
  SgdMomentum sgd(0.9);
  sgd.step(reg, 0.1);
  EXPECT_EQ(sgd.velocity("w")->at({0}), 2.0);
  sgd.step(reg, 0.1);
  EXPECT_DOUBLE_EQ(sgd.velocity("w")->at({0}), 1.9 * 2.0);
  EXPECT_DOUBLE_EQ(reg.at("w").value[0], -0.1 * 2.0 - 0.1 * 3.8);
  EXPECT_EQ(sgd.velocity("missing"), nullptr);
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
  ParamRegistry reg = one_weight(0.7, 0.0);
  SgdMomentum sgd(0.9);
  for (int i = 0; i < 3; ++i) sgd.step(reg, 0.01);
  EXPECT_EQ(reg.at("w").value[0], 0.7);
}

TEST(Sgd, NonFiniteGradientAbortsWholeStep) {
  ParamRegistry reg;
  reg.add("a", Tensor({2}, 1.0)).grad = Tensor({2}, 1.0);
  reg.add("b", Tensor({1}, 1.0)).grad = Tensor({1}, std::numeric_limits<double>::quiet_NaN());
  SgdMomentum sgd(0.9);
  EXPECT_THROW(sgd.step(reg, 0.1), NumericError);
  EXPECT_EQ(reg.at("a").value, Tensor({2}, 1.0));
  EXPECT_EQ(sgd.velocity("a"), nullptr);
  reg.at("b").grad = Tensor({1}, std::numeric_limits<double>::infinity());
  EXPECT_THROW(sgd.step(reg, 0.1), NumericError);
  reg.at("b").grad = Tensor({1}, 0.0);
  EXPECT_THROW(sgd.step(reg, 0.0), ConfigError);
}

TEST(LrSchedule, ClosedFormEveryEpoch) {
  TrainConfig t;
  for (int e = 0; e < 60; ++e) {
    const double want = e < 20 ? 0.01 : e < 40 ? 0.001 : 0.0001;
    EXPECT_EQ(lr_schedule(t, e), want) << e;
  }
  EXPECT_THROW(lr_schedule(t, -1), ConfigError);
}

TEST(Synth, BalancedAndDeterministic) {
  Dataset a = synth_dataset(SynthKind::visual, 4, 200, 11);
  std::vector<int> count(4, 0);
  for (const auto& s : a.samples) ++count[static_cast<std::size_t>(s.label)];
  EXPECT_EQ(count, (std::vector<int>{50, 50, 50, 50}));
  EXPECT_EQ(a.samples[0].input.shape(), (Shape{3, 48, 48}));

  Dataset b = synth_dataset(SynthKind::visual, 4, 200, 11);
  Dataset c = synth_dataset(SynthKind::visual, 4, 200, 12);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.samples[i].input, b.samples[i].input);
  EXPECT_FALSE(a.samples[0].input == c.samples[0].input);

  Dataset au = synth_dataset(SynthKind::audio, 3, 6, 1);
  EXPECT_EQ(au.samples[0].input.shape(), (Shape{1, 41, 64}));
  EXPECT_THROW(synth_dataset(SynthKind::visual, 1, 10, 1), ConfigError);
  EXPECT_THROW(synth_dataset(SynthKind::visual, 9, 10, 1), ConfigError);
}

TEST(Synth, LinearPixelBaselineStaysBelow90) {
  Dataset tr = synth_dataset(SynthKind::visual, 4, 200, 7);
  Dataset te = synth_dataset(SynthKind::visual, 4, 80, 8);
  EXPECT_LT(linear_pixel_baseline(tr, te, 200), 0.9);
}

TEST(Model, TinyShapesAndIdenticalRows) {
  AgcnModel m(quick(1));
  Rng rng(1);
  Tensor x = random_tensor({3, 3, 48, 48}, rng, 0.0, 1.0);
  std::copy_n(x.data().begin(), 3 * 48 * 48, x.data().begin() + 2 * 3 * 48 * 48);
  Tape tape;
  ForwardOutput out = m.forward(tape, x);
  EXPECT_EQ(out.logits.shape(), (Shape{3, 4}));
  EXPECT_EQ(out.classifier_input.shape(), (Shape{3, 2u * 8u * 8u + 32u}));
  EXPECT_EQ(out.graphs.size(), 3u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out.logits.value().at({0, j}), out.logits.value().at({2, j}));
  EXPECT_THROW(m.forward(tape, Tensor({1, 3, 48, 40})), ConfigError);
}

TEST(Model, FullVisualClassifierWidth) {
  AgcnConfig c = AgcnConfig::full_visual(7);
  AgcnModel m(c);
  EXPECT_EQ(m.classifier_input_width(), 12288u);
  EXPECT_EQ(m.params().at("head.weight").value.shape(), (Shape{7, 12288}));
}

TEST(Model, GraphBranchSwitchZeroesReadout) {
  AgcnModel m(quick(1));
  Rng rng(2);
  Tensor x = random_tensor({2, 3, 48, 48}, rng, 0.0, 1.0);
  m.set_graph_branch(false);
  Tape tape;
  const Tensor& ci = m.forward(tape, x).classifier_input.value();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 128; ++i) EXPECT_EQ(ci.at({b, i}), 0.0);
}

TEST(Training, EvaluateConfusionMatchesAccuracy) {
  AgcnModel m(quick(1));
  Dataset d = small_visual(24, 3);
  EvalResult r = evaluate(m, d, 5);
  std::size_t trace = 0, total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < 4; ++j) row += r.confusion[i][j];
    EXPECT_EQ(row, 6u);
    trace += r.confusion[i][i];
    total += row;
  }
  EXPECT_EQ(total, r.total);
  EXPECT_EQ(static_cast<double>(trace) / static_cast<double>(total), r.accuracy);
  EXPECT_THROW(evaluate(m, Dataset{}, 4), DataError);
  d.samples[0].label = 4;
  EXPECT_THROW(evaluate(m, d, 4), DataError);
}

TEST(Training, MemorizesSingleSample) {
  AgcnConfig c = quick(15);
  c.train.batch_size = 1;
  AgcnModel m(c);
  Dataset d = small_visual(1, 4);
  TrainReport r = train(m, d, d);
  EXPECT_EQ(r.epochs.back().train_acc, 1.0);
  EXPECT_EQ(r.final_eval.accuracy, 1.0);
  EXPECT_LT(r.epochs.back().loss, r.epochs.front().loss);
}

TEST(Training, SameSeedSameTrace) {
  Dataset tr = small_visual(16, 5), te = small_visual(8, 6);
  AgcnModel a(quick(2)), b(quick(2));
  const std::string ca = metrics_csv(train(a, tr, te));
  const std::string cb = metrics_csv(train(b, tr, te));
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(ca.substr(0, ca.find('\n')), "epoch,lr,loss,train_acc,test_acc");
  for (const auto& p : a.params()) EXPECT_EQ(p.value, b.params().at(p.name).value) << p.name;
}

TEST(Training, RejectsEmptySets) {
  AgcnModel m(quick(1));
  Dataset d = small_visual(4, 1);
  EXPECT_THROW(train(m, Dataset{}, d), DataError);
  EXPECT_THROW(train(m, d, Dataset{}), DataError);
}

TEST(Training, CrossValidationFoldCount) {
  Dataset d = small_visual(12, 2);
  auto acc = cross_validate(quick(1), d, 3);
  ASSERT_EQ(acc.size(), 3u);
  for (double a : acc) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_THROW(cross_validate(quick(1), d, 1), ConfigError);
}

TEST(Config, ParseRoundTripAndErrors) {
  AgcnConfig c = AgcnConfig::tiny_visual(5);
  c.seed = 77;
  c.train.lr0 = 0.0123;
  std::istringstream in(config_to_text(c));
  AgcnConfig back = parse_config(in);
  EXPECT_EQ(config_to_text(back), config_to_text(c));

  std::istringstream partial("# comment\n\nmodel.k_nodes = 12   # trailing\ntrain.batch_size=4\n");
  AgcnConfig p = parse_config(partial, AgcnConfig::tiny_visual(4));
  EXPECT_EQ(p.k_nodes, 12);
  EXPECT_EQ(p.train.batch_size, 4);

  std::istringstream unknown("model.nodes = 3\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream noeq("model.k_nodes 3\n");
  EXPECT_THROW(parse_config(noeq), ConfigError);
  std::istringstream badint("model.k_nodes = twelve\n");
  EXPECT_THROW(parse_config(badint), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/agcn.cfg"), ConfigError);
}

TEST(Config, NodeSweepValidation) {
  AgcnConfig c = AgcnConfig::full_visual(7);
  for (int k : {8, 12, 16, 20, 24}) {
    c.k_nodes = k;
    EXPECT_NO_THROW(c.validate());
  }
  c.k_nodes = 28;
  EXPECT_THROW(c.validate(), ConfigError);
  c.strict_node_sweep = false;
  EXPECT_NO_THROW(c.validate());
  c.k_nodes = 10;
  EXPECT_THROW(c.validate(), ConfigError);

  AgcnConfig t = AgcnConfig::tiny_visual(4);
  t.k_nodes = 12;  // 6x6 grid holds 36 = 3k positions
  EXPECT_NO_THROW(t.validate());
  t.k_nodes = 16;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Config, SeedFromEnvironment) {
  AgcnConfig c;
  ::setenv("AGCN_SEED", "123", 1);
  apply_env_overrides(c);
  EXPECT_EQ(c.seed, 123u);
  ::setenv("AGCN_SEED", "abc", 1);
  EXPECT_THROW(apply_env_overrides(c), ConfigError);
  ::unsetenv("AGCN_SEED");
}

TEST(Checkpoint, RoundTripReproducesLogits) {
  const auto dir = std::filesystem::temp_directory_path() / "agcn_ckpt_test";
  std::filesystem::remove_all(dir);
  AgcnConfig c = quick(1);
  c.seed = 9;
  AgcnModel m(c);
  for (Parameter& p : m.params()) p.value = round_to_f32(p.value);
  save_checkpoint(dir, m);
  auto back = load_checkpoint(dir);
  EXPECT_EQ(config_to_text(back->config()), config_to_text(c));
  Rng rng(3);
  Tensor x = random_tensor({2, 3, 48, 48}, rng, 0.0, 1.0);
  Tape t1, t2;
  EXPECT_EQ(m.forward(t1, x).logits.value(), back->forward(t2, x).logits.value());

  std::filesystem::remove(dir / "head.bias.agt");
  EXPECT_THROW(load_checkpoint(dir), DataError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir), ConfigError);
}

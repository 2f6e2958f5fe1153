// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "agcn/audio.hpp"
#include "agcn/checkpoint.hpp"
#include "agcn/gcn.hpp"
#include "agcn/gradcheck.hpp"
#include "agcn/graph.hpp"
#include "agcn/ops.hpp"
#include "agcn/overlay.hpp"
#include "agcn/runtime.hpp"
#include "agcn/train.hpp"

using namespace agcn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Criterion 1: shape chain at full width.
Outcome shapes() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;
  auto expect = [&](const std::string& what, const Shape& got, const Shape& want) {
    if (got != want) {
      ok = false;
      d << what << " " << shape_str(got) << " != " << shape_str(want) << "; ";
    }
  };

  AudioClip clip{std::vector<double>(80000, 0.0), 16000};
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = 0.1 * std::sin(0.05 * static_cast<double>(i));
  expect("logmel", extract_logmel(clip).values.shape(), {1, 201, 64});

  for (int in : {3, 1}) {
    ParamRegistry reg;
    Backbone b(BackboneConfig::full(in), reg, 1);
    AttentionFusion afm(1024, 2048, reg, 2);
    const Shape input = in == 3 ? Shape{1, 3, 224, 224} : Shape{1, 1, 201, 64};
    Tape tape;
    FeaturePyramid p = b.forward(tape, tape.constant(Tensor(input, 0.5)));
    Var f = afm.forward(tape, p.f_m4, p.f_m5);
    if (in == 3) {
      expect("visual Res-4", p.f_m4.shape(), {1, 1024, 28, 28});
      expect("visual Res-5", p.f_m5.shape(), {1, 2048, 14, 14});
      expect("visual AFM", f.shape(), {1, 1024, 28, 28});
    } else {
      expect("audio Res-4", p.f_m4.shape(), {1, 1024, 26, 8});
      expect("audio Res-5", p.f_m5.shape(), {1, 2048, 13, 4});
      expect("audio AFM", f.shape(), {1, 1024, 26, 8});
    }
  }
  const double t = seconds_since(t0);
  if (t >= 10.0) ok = false;
  d << "time " << t << "s";
  return {ok, d.str()};
}

// Criterion 2: subgraph centres for K = 20.
Outcome centers() {
  SubgraphLayout l = build_subgraphs(20);
  std::vector<std::size_t> one_based;
  for (auto c : l.centers) one_based.push_back(c + 1);
  const bool ok = one_based == std::vector<std::size_t>{11, 12, 13, 14, 15};
  std::ostringstream d;
  d << "centres (1-based)";
  for (auto c : one_based) d << ' ' << c;
  return {ok, d.str()};
}

// Full sort, intensity descending and flat index ascending on ties.
NodeSelection oracle_select(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
  NodeSelection s;
  s.salient.assign(order.begin(), order.begin() + static_cast<long>(k));
  const std::size_t mid = v.size() / 2 - k / 2;
  s.contextual.assign(order.begin() + static_cast<long>(mid), order.begin() + static_cast<long>(mid + k));
  std::sort(s.salient.begin(), s.salient.end());
  std::sort(s.contextual.begin(), s.contextual.end());
  return s;
}

// Criterion 3: selection against the oracle, plus affine invariance.
Outcome selection() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  int mismatches = 0, affine_mismatches = 0, maps = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t h = 6 + rng.below(7), w = 6 + rng.below(7);
    const std::size_t k = 4 * (1 + rng.below(3));
    // Eighths in [0, 4) so ties occur and 2v + 3 is exact.
    std::vector<double> v(h * w);
    for (double& x : v) x = static_cast<double>(rng.below(32)) / 8.0;
    NodeSelection got = select_nodes(v, h, w, k);
    NodeSelection want = oracle_select(v, k);
    if (got.salient != want.salient || got.contextual != want.contextual) ++mismatches;
    std::vector<double> t(v.size());
    std::transform(v.begin(), v.end(), t.begin(), [](double x) { return 2.0 * x + 3.0; });
    NodeSelection moved = select_nodes(t, h, w, k);
    if (moved.salient != got.salient || moved.contextual != got.contextual) ++affine_mismatches;
    ++maps;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << maps << " maps, " << mismatches << " oracle mismatches, " << affine_mismatches << " affine mismatches, time "
    << secs << "s";
  return {mismatches == 0 && affine_mismatches == 0 && secs < 5.0, d.str()};
}

Eigen::MatrixXd dense(const Tensor& t) {
  const auto k = static_cast<Eigen::Index>(t.dim(0));
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = t[static_cast<std::size_t>(i * k + j)];
  return m;
}

// Criterion 4: symmetry and spectral radius of the propagation matrix.
Outcome spectral() {
  const auto t0 = Clock::now();
  Rng rng(4);
  double worst_asym = 0.0, worst_radius = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = std::vector<std::size_t>{8, 20, 24}[static_cast<std::size_t>(trial) % 3];
    const std::size_t gh = 6 + rng.below(23), gw = 6 + rng.below(23);
    std::vector<std::size_t> cells(gh * gw);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(cells));
    cells.resize(k);
    std::sort(cells.begin(), cells.end());
    const auto pos = node_positions(cells, gw);
    const Adjacency a = build_adjacency(pos, build_subgraphs(k));
    const Eigen::MatrixXd l = dense(propagation_matrix(a.weights).l_norm);
    worst_asym = std::max(worst_asym, (l - l.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    worst_radius = std::max(worst_radius, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  Tensor hand({2, 2}, std::vector<double>{0, 2, 2, 0});
  const Tensor h = propagation_matrix(hand).l_norm;
  const std::vector<double> want{1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0 / 3};
  double hand_err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) hand_err = std::max(hand_err, std::abs(h[i] - want[i]));
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max asymmetry " << worst_asym << ", max |eigenvalue| " << worst_radius << ", hand-case error " << hand_err
    << ", time " << secs << "s";
  return {worst_asym <= 1e-12 && worst_radius <= 1.0 + 1e-9 && hand_err <= 1e-12 && secs < 10.0, d.str()};
}

// Criterion 5: whole-model finite differences.
Outcome gradients() {
  const auto t0 = Clock::now();
  // 48x32 is the smallest input whose 6x4 grid holds 3k nodes at k = 8.
  AgcnConfig cfg = AgcnConfig::tiny_visual(2);
  cfg.input_w = 32;
  AgcnModel model(cfg);
  Rng rng(5);
  Tensor x({1, 3, 48, 32});
  for (double& v : x.data()) v = rng.uniform();
  const std::vector<int> labels{1};
  auto loss = [&](Tape& tape) { return ops::softmax_cross_entropy(model.forward(tape, x).logits, labels); };
  GradCheckReport r = finite_diff_check(model.params(), loss, 1e-5);
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << model.params().scalar_count() << " scalars in " << r.params.size() << " tensors, max relative error "
    << r.max_rel_error << " (" << r.worst_param << "), time " << secs << "s";
  return {r.max_rel_error < 1e-4 && secs < 60.0, d.str()};
}

struct LearningRun {
  TrainReport report;
  double knockout = 0.0;
  double seconds = 0.0;
};

LearningRun learning_run(std::uint64_t seed) {
  const auto t0 = Clock::now();
  AgcnConfig cfg = AgcnConfig::tiny_visual(4);
  cfg.seed = seed;
  const Dataset tr = synth_dataset(SynthKind::visual, 4, 200, 7);
  const Dataset te = synth_dataset(SynthKind::visual, 4, 80, 8);
  AgcnModel model(cfg);
  LearningRun run;
  run.report = train(model, tr, te);
  model.set_graph_branch(false);
  run.knockout = evaluate(model, te).accuracy;
  run.seconds = seconds_since(t0);
  return run;
}

// Mean over 3-epoch windows must not rise after epoch 5.
bool smoothed_loss_non_increasing(const TrainReport& r, std::string& where) {
  std::vector<double> smooth;
  for (std::size_t e = 5; e + 2 < r.epochs.size(); ++e) {
    smooth.push_back((r.epochs[e].loss + r.epochs[e + 1].loss + r.epochs[e + 2].loss) / 3.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) {
    if (smooth[i] > smooth[i - 1]) {
      std::ostringstream d;
      d << "window at epoch " << i + 5 << " rises " << smooth[i - 1] << " -> " << smooth[i];
      where = d.str();
      return false;
    }
  }
  return true;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Criterion 7, second half: two runs of the visualize command.
Outcome visualize_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "agcn_acceptance_vis";
  fs::remove_all(dir);
  fs::create_directories(dir);
  AgcnConfig cfg = AgcnConfig::tiny_visual(4);
  cfg.input_h = cfg.input_w = 96;
  cfg.k_nodes = 20;
  AgcnModel model(cfg);
  save_checkpoint(dir / "ckpt", model);
  Rng rng(12);
  write_ppm(dir / "scene.ppm", synth_image(1, 4, rng, 96));

  auto run = [&](const std::string& tag) {
    const std::string cmd = std::string("\"") + AGCN_CLI_PATH + "\" visualize --input \"" +
                            (dir / "scene.ppm").string() + "\" --checkpoint \"" + (dir / "ckpt").string() +
                            "\" --k 20 --out \"" + (dir / (tag + ".ppm")).string() + "\" --graph-json \"" +
                            (dir / (tag + ".json")).string() + "\" > \"" + (dir / (tag + ".log")).string() +
                            "\" 2>&1";
    return std::system(cmd.c_str());
  };
  if (run("a") != 0 || run("b") != 0) {
    detail = "visualize failed: " + read_bytes(dir / "a.log") + read_bytes(dir / "b.log");
    return {false, detail};
  }
  const std::string a = read_bytes(dir / "a.ppm"), b = read_bytes(dir / "b.ppm");
  const bool same = !a.empty() && a == b;

  // Every node centre must carry its graph's colour in the written image.
  const Image img = read_pnm(dir / "a.ppm");
  const auto doc = nlohmann::json::parse(read_bytes(dir / "a.json"));
  const std::size_t gh = doc["h"], gw = doc["w"];
  const OverlaySpec spec;
  std::set<std::pair<long, long>> drawn;
  bool colours_ok = true, in_bounds = true;
  for (const auto& n : doc["nodes"]) {
    const PixelPos p = grid_to_pixel({n["x"].get<std::size_t>(), n["y"].get<std::size_t>()}, gw, gh, img.width, img.height);
    if (p.x < 0 || p.y < 0 || p.x >= static_cast<long>(img.width) || p.y >= static_cast<long>(img.height)) {
      in_bounds = false;
      continue;
    }
    const Rgb want = n["kind"] == "salient" ? spec.salient : spec.contextual;
    const std::uint8_t* px = img.pixel(static_cast<std::size_t>(p.x), static_cast<std::size_t>(p.y));
    if (px[0] != want.r || px[1] != want.g || px[2] != want.b) colours_ok = false;
    drawn.insert({p.x, p.y});
  }
  std::ostringstream d;
  d << "PPMs " << (same ? "byte-identical" : "differ") << " (" << a.size() << " bytes), " << drawn.size()
    << " distinct node markers" << (colours_ok ? "" : ", marker colour mismatch")
    << (in_bounds ? "" : ", marker out of bounds");
  detail = d.str();
  fs::remove_all(dir);
  return {same && drawn.size() == 40 && doc["nodes"].size() == 40 && colours_ok && in_bounds, detail};
}

// Criterion 8: exact schedule values.
Outcome schedule() {
  TrainConfig t;
  const bool ok = lr_schedule(t, 0) == 0.01 && lr_schedule(t, 20) == 0.001 && lr_schedule(t, 40) == 0.0001 &&
                  lr_schedule(t, 59) == 0.0001;
  std::ostringstream d;
  d.precision(17);
  d << "lr(0)=" << lr_schedule(t, 0) << " lr(20)=" << lr_schedule(t, 20) << " lr(40)=" << lr_schedule(t, 40)
    << " lr(59)=" << lr_schedule(t, 59);
  return {ok, d.str()};
}

}  // namespace

int main() {
  keep_freed_memory();
  int failures = 0;
  auto report = [&](int n, const std::string& name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [&](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("threw: ") + e.what()};
    }
  };

  report(1, "shape fidelity", guarded(shapes));
  report(2, "subgraph centres", guarded(centers));
  report(3, "node selection oracle", guarded(selection));
  report(4, "spectral contract", guarded(spectral));
  report(5, "gradient check", guarded(gradients));

  LearningRun first, second;
  report(6, "end-to-end learning", guarded([&] {
           first = learning_run(0);
           const double acc = first.report.final_eval.accuracy;
           std::ostringstream d;
           d << "test accuracy " << 100.0 * acc << "%, graph branch zeroed " << 100.0 * first.knockout
             << "%, time " << first.seconds << "s";
           std::string where;
           if (!smoothed_loss_non_increasing(first.report, where)) d << " (note: smoothed loss " << where << ")";
           return Outcome{acc >= 0.95 && first.knockout <= acc - 0.05 && first.seconds < 300.0, d.str()};
         }));

  report(7, "determinism", guarded([&] {
           second = learning_run(0);
           const bool csv_same = metrics_csv(first.report) == metrics_csv(second.report);
           std::string vis;
           const Outcome v = visualize_determinism(vis);
           return Outcome{csv_same && v.pass,
                          std::string("loss CSVs ") + (csv_same ? "bit-identical" : "differ") + "; " + vis};
         }));

  report(8, "lr schedule", guarded(schedule));
  return failures == 0 ? 0 : 1;
}

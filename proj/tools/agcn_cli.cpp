#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agcn/audio.hpp"
#include "agcn/checkpoint.hpp"
#include "agcn/error.hpp"
#include "agcn/gradcheck.hpp"
#include "agcn/graph.hpp"
#include "agcn/ops.hpp"
#include "agcn/overlay.hpp"
#include "agcn/runtime.hpp"
#include "agcn/tensor_io.hpp"
#include "agcn/train.hpp"

using namespace agcn;
namespace fs = std::filesystem;

namespace {

constexpr int kSampleRate = 16000;

std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Audio length whose log-mel frame count equals the model's input height.
double seconds_for_frames(std::size_t frames, const LogMelOptions& o) {
  return static_cast<double>((frames - 1) * static_cast<std::size_t>(o.hop)) / kSampleRate;
}

Tensor audio_features(const fs::path& path, double seconds) {
  return audio_input(fix_length(resample(load_wav(path), kSampleRate), seconds));
}

// Network input [1,C,H,W] for one file under the model's config.
Tensor model_input(const fs::path& path, const AgcnConfig& cfg) {
  Tensor t = cfg.modality == Modality::visual
                 ? load_visual_input(path, cfg.input_h, cfg.input_w)
                 : audio_features(path, seconds_for_frames(cfg.input_h, {}));
  Shape s{1};
  s.insert(s.end(), t.shape().begin(), t.shape().end());
  return t.reshaped(s);
}

Dataset synthetic(const AgcnConfig& cfg, std::size_t n, std::uint64_t seed) {
  SynthOptions o;
  SynthKind kind = SynthKind::visual;
  if (cfg.modality == Modality::visual) {
    if (cfg.input_h != cfg.input_w) throw ConfigError("synthetic visual data needs a square input");
    o.image_size = cfg.input_h;
  } else {
    kind = SynthKind::audio;
    o.audio_seconds = seconds_for_frames(cfg.input_h, o.logmel);
  }
  return synth_dataset(kind, cfg.num_classes, n, seed, o);
}

// The test split uses the next seed.
std::pair<Dataset, Dataset> synthetic_split(const AgcnConfig& cfg) {
  return {synthetic(cfg, cfg.data.train_n, cfg.data.seed), synthetic(cfg, cfg.data.test_n, cfg.data.seed + 1)};
}

struct ConfigArgs {
  std::string preset = "tiny";
  std::string modality = "visual";
  std::string config_file;
  std::optional<int> classes, epochs, batch;
  std::optional<std::uint64_t> seed;
  // Applied to the preset before the config file.
  std::function<void(AgcnConfig&)> adjust;

  void add(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "tiny or full")->check(CLI::IsMember({"tiny", "full"}));
    cmd->add_option("--modality", modality, "audio or visual")->check(CLI::IsMember({"audio", "visual"}));
    cmd->add_option("--config", config_file, "key = value overrides");
    cmd->add_option("--classes", classes);
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch", batch);
    cmd->add_option("--seed", seed);
  }

  AgcnConfig build() const {
    const int n = classes.value_or(4);
    const bool audio = modality == "audio";
    AgcnConfig c = preset == "tiny" ? (audio ? AgcnConfig::tiny_audio(n) : AgcnConfig::tiny_visual(n))
                                    : (audio ? AgcnConfig::full_audio(n) : AgcnConfig::full_visual(n));
    if (adjust) adjust(c);
    if (!config_file.empty()) c = load_config(config_file, c);
    if (classes) c.num_classes = *classes;
    if (epochs) c.train.epochs = *epochs;
    if (batch) c.train.batch_size = *batch;
    if (seed) c.seed = *seed;
    apply_env_overrides(c);
    c.validate();
    return c;
  }
};

int cmd_extract(const std::string& manifest, const std::string& modality, const fs::path& out, std::size_t size,
                double seconds) {
  const auto entries = read_manifest(manifest);
  if (entries.empty()) throw ConfigError("empty manifest");
  fs::create_directories(out);
  std::vector<ManifestEntry> index;
  std::ostringstream errors;
  int failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.agt", i);
    try {
      Tensor t = modality == "audio" ? audio_features(entries[i].path, seconds)
                                     : load_visual_input(entries[i].path, size, size);
      save_agt(out / name, t);
      index.push_back({name, entries[i].label});
      std::cout << entries[i].path << " -> " << name << ' ' << shape_str(t.shape()) << '\n';
    } catch (const std::exception& e) {
      ++failed;
      errors << entries[i].path << '\t' << e.what() << '\n';
      std::cerr << "error: " << entries[i].path << ": " << e.what() << '\n';
    }
  }
  write_manifest(out / "index.tsv", index);
  if (failed) write_text(out / "errors.tsv", errors.str());
  std::cout << index.size() << " extracted, " << failed << " failed\n";
  return failed ? 1 : 0;
}

int cmd_train(const ConfigArgs& args, const std::string& train_manifest, const std::string& test_manifest,
              const fs::path& out, int folds) {
  const AgcnConfig cfg = args.build();
  Dataset tr, te;
  if (!train_manifest.empty()) {
    if (test_manifest.empty()) throw ConfigError("--train-manifest needs --test-manifest");
    tr = load_feature_dataset(train_manifest, cfg.num_classes);
    te = load_feature_dataset(test_manifest, cfg.num_classes);
  } else {
    std::tie(tr, te) = synthetic_split(cfg);
  }
  if (folds > 0) {
    Dataset all = tr;
    all.samples.insert(all.samples.end(), te.samples.begin(), te.samples.end());
    const auto acc = cross_validate(cfg, all, folds);
    double mean = 0.0;
    for (std::size_t f = 0; f < acc.size(); ++f) {
      std::cout << "fold " << f << " accuracy " << exact(acc[f]) << '\n';
      mean += acc[f];
    }
    std::cout << "mean accuracy " << exact(mean / static_cast<double>(acc.size())) << '\n';
    return 0;
  }

  AgcnModel model(cfg);
  const TrainReport r = train(model, tr, te);
  for (const auto& e : r.epochs) {
    std::printf("epoch %2d lr %.0e loss %.6f train %.4f test %.4f\n", e.epoch, e.lr, e.loss, e.train_acc,
                e.test_acc);
  }
  if (!out.empty()) {
    fs::create_directories(out);
    save_checkpoint(out / "checkpoint", model);
    write_text(out / "metrics.csv", metrics_csv(r));
    write_text(out / "confusion.csv", confusion_csv(r.final_eval));
  }
  std::cout << "accuracy " << exact(r.final_eval.accuracy) << '\n';
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const std::string& manifest) {
  auto model = load_checkpoint(checkpoint);
  const AgcnConfig& cfg = model->config();
  const Dataset te = manifest.empty() ? synthetic(cfg, cfg.data.test_n, cfg.data.seed + 1)
                                      : load_feature_dataset(manifest, cfg.num_classes);
  const EvalResult r = evaluate(*model, te);
  std::cout << confusion_csv(r) << "accuracy " << exact(r.accuracy) << '\n';
  return 0;
}

int cmd_gradcheck(const ConfigArgs& args, double epsilon, double tolerance) {
  ConfigArgs a = args;
  if (!a.classes) a.classes = 2;
  // At 48x32 the tiny Res-4 grid is 6x4, exactly 3k cells for k = 8, so node
  // selection cannot flip under a weight nudge and break the differences.
  a.adjust = [&a](AgcnConfig& c) {
    if (a.preset == "tiny" && c.modality == Modality::visual) c.input_w = 32;
  };
  AgcnConfig cfg = a.build();
  AgcnModel model(cfg);
  // One seeded uniform sample; any input shape the config allows.
  Rng rng(cfg.data.seed);
  Tensor x({1, static_cast<std::size_t>(cfg.backbone.in_channels), cfg.input_h, cfg.input_w});
  for (double& v : x.data()) v = rng.uniform();
  const std::vector<int> labels{cfg.num_classes - 1};
  auto loss = [&](Tape& tape) { return ops::softmax_cross_entropy(model.forward(tape, x).logits, labels); };
  const GradCheckReport r = finite_diff_check(model.params(), loss, epsilon);
  for (const auto& p : r.params) std::printf("%-40s %8zu %.3e\n", p.name.c_str(), p.scalars, p.max_rel_error);
  std::cout << "max relative error " << r.max_rel_error << " (" << r.worst_param << ")\n";
  return r.max_rel_error < tolerance ? 0 : 1;
}

int cmd_synth(const std::string& kind, int classes, std::size_t n, std::uint64_t seed, const fs::path& out,
              std::size_t size, double seconds) {
  if (classes < 2 || classes > 8) throw ConfigError("--classes must be in [2,8]");
  fs::create_directories(out);
  Rng rng(seed);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    char name[32];
    if (kind == "visual") {
      std::snprintf(name, sizeof name, "%05zu.ppm", i);
      write_ppm(out / name, synth_image(label, classes, rng, size));
    } else {
      std::snprintf(name, sizeof name, "%05zu.wav", i);
      save_wav(out / name, synth_clip(label, classes, rng, seconds, kSampleRate));
    }
    entries.push_back({name, label});
  }
  write_manifest(out / "manifest.tsv", entries);
  std::cout << n << " " << kind << " samples in " << out.string() << '\n';
  return 0;
}

int cmd_visualize(const fs::path& input, const fs::path& checkpoint, std::optional<int> k_opt, const fs::path& out,
                  const std::string& json_out, int scale, int radius) {
  if (scale < 1) throw ConfigError("--scale must be >= 1");
  OverlaySpec spec;
  spec.node_radius = radius;
  spec.validate();
  if (k_opt && *k_opt < 0) throw ConfigError("--k must be positive");
  auto model = load_checkpoint(checkpoint);
  const AgcnConfig& cfg = model->config();
  const std::size_t k = static_cast<std::size_t>(k_opt.value_or(cfg.k_nodes));
  const StageDims dims = backbone_stage_dims(cfg.input_h, cfg.input_w);
  validate_node_count(k, dims.h[3], dims.w[3]);

  const Tensor x = model_input(input, cfg);
  Tape tape;
  const Var f_ffr = model->fused_features(tape, x);
  const ScenePair pair = build_scene_graphs(f_ffr.value(), k).front();

  Image base;
  if (cfg.modality == Modality::visual) {
    base = read_pnm(input);
  } else {
    Shape s(x.shape().begin() + 1, x.shape().end());
    base = render_heatmap(x.reshaped(s));
  }
  base = upscale_nearest(base, static_cast<std::size_t>(scale));
  const OverlayResult r = render_overlay(base, pair, spec);
  write_ppm(out, r.image);
  if (!json_out.empty()) write_text(json_out, scene_graphs_to_json(pair) + "\n");
  std::cout << "drew " << r.markers.size() << " node markers (" << pair.salient.positions.size() << " salient, "
            << pair.contextual.positions.size() << " contextual) on a " << pair.h << "x" << pair.w << " grid\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  keep_freed_memory();
  CLI::App app{"Attentive graph convolutional network for audio-visual scene classification"};
  app.require_subcommand(1);

  std::string manifest, modality = "visual", out, test_manifest, json_out, checkpoint, input, kind = "visual";
  std::size_t size = 48, n = 200;
  double seconds = 5.0, epsilon = 1e-5, tolerance = 1e-4;
  int folds = 0, scale = 1, radius = 3, classes = 4;
  std::uint64_t seed = 0;
  std::optional<int> k;
  ConfigArgs train_args, grad_args;

  auto* extract = app.add_subcommand("extract", "Turn a manifest of WAV or PNM files into AGT1 features");
  extract->add_option("--manifest", manifest, "path<TAB>label lines")->required();
  extract->add_option("--modality", modality)->required()->check(CLI::IsMember({"audio", "visual"}));
  extract->add_option("--out", out)->required();
  extract->add_option("--size", size, "visual input side in pixels")->capture_default_str();
  extract->add_option("--seconds", seconds, "audio clip length")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train on feature manifests or the synthetic task");
  train_args.add(train_cmd);
  train_cmd->add_option("--train-manifest", manifest);
  train_cmd->add_option("--test-manifest", test_manifest);
  train_cmd->add_option("--out", out, "checkpoint, metrics.csv and confusion.csv go here");
  train_cmd->add_option("--folds", folds, "k-fold cross-validation over train+test instead");

  auto* eval = app.add_subcommand("eval", "Accuracy and confusion matrix of a checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--manifest", manifest, "feature manifest; default is the synthetic test split");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the whole model");
  grad_args.add(grad);
  bool tiny = false;
  grad->add_flag("--tiny", tiny, "tiny preset (the default)");
  grad->add_option("--epsilon", epsilon)->capture_default_str();
  grad->add_option("--tolerance", tolerance)->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write the synthetic dataset as WAV/PPM files plus a manifest");
  synth->add_option("--kind", kind)->check(CLI::IsMember({"audio", "visual"}));
  synth->add_option("--classes", classes)->capture_default_str();
  synth->add_option("--n", n)->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--out", out)->required();
  synth->add_option("--size", size)->capture_default_str();
  synth->add_option("--seconds", seconds)->capture_default_str();

  auto* vis = app.add_subcommand("visualize", "Draw the salient and contextual graphs over an input");
  vis->add_option("--input", input)->required();
  vis->add_option("--checkpoint", checkpoint)->required();
  vis->add_option("--k", k, "nodes per graph; default from the checkpoint");
  vis->add_option("--out", out)->required();
  vis->add_option("--graph-json", json_out);
  vis->add_option("--scale", scale, "nearest-neighbour upscale of the base image")->capture_default_str();
  vis->add_option("--radius", radius)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*extract) return cmd_extract(manifest, modality, out, size, seconds);
    if (*train_cmd) return cmd_train(train_args, manifest, test_manifest, out, folds);
    if (*eval) return cmd_eval(checkpoint, manifest);
    if (*grad) {
      if (tiny) grad_args.preset = "tiny";
      return cmd_gradcheck(grad_args, epsilon, tolerance);
    }
    if (*synth) return cmd_synth(kind, classes, n, seed, out, size, seconds);
    if (*vis) return cmd_visualize(input, checkpoint, k, out, json_out, scale, radius);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

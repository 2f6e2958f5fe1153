#include "agcn/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "agcn/error.hpp"
#include "agcn/tensor_io.hpp"

namespace agcn {

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected path<TAB>label");
    }
    ManifestEntry e;
    std::filesystem::path p = line.substr(0, tab);
    e.path = (p.is_relative() ? base / p : p).string();
    try {
      std::size_t used = 0;
      const std::string label = line.substr(tab + 1);
      e.label = std::stoi(label, &used);
      if (used != label.size()) throw std::invalid_argument(label);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad label");
    }
    if (e.label < 0) throw DataError(path.string() + ":" + std::to_string(lineno) + ": negative label");
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& e : entries) out << e.path << '\t' << e.label << '\n';
}

Dataset load_feature_dataset(const std::filesystem::path& manifest, int num_classes) {
  Dataset ds;
  ds.num_classes = num_classes;
  for (const auto& e : read_manifest(manifest)) {
    if (e.label >= num_classes) {
      throw DataError(e.path + ": label " + std::to_string(e.label) + " >= num_classes " + std::to_string(num_classes));
    }
    Tensor t = load_agt(e.path);
    if (t.rank() == 2) t = t.reshaped({1, t.dim(0), t.dim(1)});
    if (t.rank() != 3) throw DataError(e.path + ": expected a [C,H,W] feature tensor, got " + shape_str(t.shape()));
    ds.samples.push_back({std::move(t), e.label});
  }
  return ds;
}

namespace {

// Oriented stripes, period 4 px.
double stripes(double angle, double x, double y, double phase) {
  constexpr double period = 4.0;
  const double w = 2.0 * std::numbers::pi / period;
  return std::sin(w * (x * std::cos(angle) + y * std::sin(angle)) + phase);
}

}  // namespace

Image synth_image(int label, int num_classes, Rng& rng, std::size_t size) {
  if (num_classes < 2 || num_classes > 8) throw ConfigError("synth: classes must be in [2,8]");
  if (label < 0 || label >= num_classes) throw ConfigError("synth: label out of range");
  if (size < 8) throw ConfigError("synth: image size must be at least 8");
  // Classes 0-3 rotate the four textures around the quadrants, 4-7 mirror them.
  std::array<int, 4> kind{};
  for (int q = 0; q < 4; ++q) kind[q] = label < 4 ? (q + label) % 4 : (label - q) % 4;
  std::array<double, 4> phase{};
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Image img(size, size);
  const std::size_t half = size / 2;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const auto q = static_cast<std::size_t>((y >= half ? 2 : 0) + (x >= half ? 1 : 0));
      const double angle = std::numbers::pi * kind[q] / 4.0;
      double v = 0.5 + 0.4 * stripes(angle, static_cast<double>(x), static_cast<double>(y), phase[q]);
      v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
      std::fill_n(img.pixel(x, y), 3, static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  }
  return img;
}

AudioClip synth_clip(int label, int num_classes, Rng& rng, double seconds, int sample_rate) {
  if (num_classes < 2 || num_classes > 8) throw ConfigError("synth: classes must be in [2,8]");
  if (label < 0 || label >= num_classes) throw ConfigError("synth: label out of range");
  const auto len = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  const double lo_mel = hz_to_mel(150.0);
  const double hi_mel = hz_to_mel(0.4 * sample_rate);
  const double span = (hi_mel - lo_mel) / num_classes;
  const double f_lo = mel_to_hz(lo_mel + span * label);
  const double f_hi = mel_to_hz(lo_mel + span * (label + 1));

  constexpr int kPartials = 24;
  std::array<double, kPartials> freq{}, phase{};
  for (int i = 0; i < kPartials; ++i) {
    freq[static_cast<std::size_t>(i)] = rng.uniform(f_lo, f_hi);
    phase[static_cast<std::size_t>(i)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double pulse_rate = 3.0 + rng.uniform(0.0, 1.0);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    const double u = static_cast<double>(n) / static_cast<double>(len);
    double env = 1.0;
    switch (label % 4) {
      case 0: env = 1.0; break;
      case 1: env = u; break;
      case 2: env = 1.0 - u; break;
      default: env = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * pulse_rate * t); break;
    }
    double s = 0.0;
    for (int i = 0; i < kPartials; ++i) {
      s += std::sin(2.0 * std::numbers::pi * freq[static_cast<std::size_t>(i)] * t + phase[static_cast<std::size_t>(i)]);
    }
    clip.samples[n] = std::clamp(0.5 * env * s / kPartials * 4.0 + 0.01 * rng.normal(), -1.0, 1.0);
  }
  return clip;
}

Tensor audio_input(const AudioClip& clip, const LogMelOptions& options) {
  return extract_logmel(clip, options).values;
}

Dataset synth_dataset(SynthKind kind, int classes, std::size_t n, std::uint64_t seed, const SynthOptions& options) {
  if (classes < 2 || classes > 8) throw ConfigError("synth: classes must be in [2,8], got " + std::to_string(classes));
  Rng rng(seed);
  Dataset ds;
  ds.num_classes = classes;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    Tensor input = kind == SynthKind::visual
                       ? image_to_tensor(synth_image(label, classes, rng, options.image_size))
                       : audio_input(synth_clip(label, classes, rng, options.audio_seconds, options.sample_rate),
                                     options.logmel);
    ds.samples.push_back({std::move(input), label});
  }
  return ds;
}

}  // namespace agcn

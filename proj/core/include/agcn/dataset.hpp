#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agcn/audio.hpp"
#include "agcn/image.hpp"
#include "agcn/rng.hpp"
#include "agcn/tensor.hpp"

namespace agcn {

struct Sample {
  Tensor input;  // [C,H,W]
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Two views of the same scenes: audio.samples[i] and visual.samples[i] share a label.
struct PairedDataset {
  Dataset audio;
  Dataset visual;
};

struct ManifestEntry {
  std::string path;
  int label = 0;
};

// One "path<TAB>label" per line; blank lines are skipped. Relative paths are
// resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Loads AGT1 feature files listed in a manifest; shapes [C,H,W] or [H,W].
Dataset load_feature_dataset(const std::filesystem::path& manifest, int num_classes);

enum class SynthKind { audio, visual };

struct SynthOptions {
  std::size_t image_size = 48;
  double audio_seconds = 1.0;
  int sample_rate = 16000;
  LogMelOptions logmel{};
};

/// Textured quadrant layouts: each quadrant carries one of four stripe
/// orientations with a random phase plus pixel noise, and class c fixes which
/// orientation goes where. Every class uses every orientation exactly once,
/// so global texture statistics do not identify the class.
Image synth_image(int label, int num_classes, Rng& rng, std::size_t size);

/// Band-limited noise in mel-band region `label` of `num_classes` equal
/// regions, under a class-specific temporal envelope.
AudioClip synth_clip(int label, int num_classes, Rng& rng, double seconds, int sample_rate);

// n samples with labels i % classes; classes in [2,8]. Deterministic in seed.
Dataset synth_dataset(SynthKind kind, int classes, std::size_t n, std::uint64_t seed,
                      const SynthOptions& options = {});

// Network input for one clip: the log-mel values as [1,T,M].
Tensor audio_input(const AudioClip& clip, const LogMelOptions& options = {});

}  // namespace agcn

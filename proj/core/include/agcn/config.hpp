#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "agcn/backbone.hpp"

namespace agcn {

enum class Modality { audio, visual };

const char* to_string(Modality m);
Modality parse_modality(const std::string& s);

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double lr_decay_factor = 10.0;
  int lr_decay_every = 20;
  int epochs = 60;
  int batch_size = 8;
};

// Parameters of the built-in synthetic dataset used when no manifest is given.
struct DataConfig {
  std::size_t train_n = 200;
  std::size_t test_n = 80;
  std::uint64_t seed = 7;
};

struct AgcnConfig {
  Modality modality = Modality::visual;
  BackboneConfig backbone = BackboneConfig::full(3);
  std::size_t input_h = 224;
  std::size_t input_w = 224;
  int k_nodes = 20;
  int gcn_out_channels = 256;
  int gcn_layers = 1;
  int num_classes = 7;
  bool use_graph_branch = true;
  // Restrict k_nodes to {8, 12, 16, 20, 24}.
  bool strict_node_sweep = true;
  std::uint64_t seed = 0;
  TrainConfig train;
  DataConfig data;

  // Throws ConfigError, including when the Res-4 grid is too small for k.
  void validate() const;

  // Full-width backbone at 224x224 images or 5 s clips.
  static AgcnConfig full_visual(int num_classes);
  static AgcnConfig full_audio(int num_classes);
  // Desk-scale configuration: widths [4,8,8,16,32], basic blocks, k = 8.
  static AgcnConfig tiny_visual(int num_classes);
  static AgcnConfig tiny_audio(int num_classes);
};

// Flat "key = value" text; '#' starts a comment. Keys are namespaced
// (model.k_nodes, train.lr0, data.train_n). Unknown keys are a ConfigError.
AgcnConfig parse_config(std::istream& in, AgcnConfig base = {});
AgcnConfig load_config(const std::filesystem::path& path, AgcnConfig base = {});
std::string config_to_text(const AgcnConfig& config);

// Applies AGCN_SEED from the environment to config.seed if set.
void apply_env_overrides(AgcnConfig& config);

}  // namespace agcn

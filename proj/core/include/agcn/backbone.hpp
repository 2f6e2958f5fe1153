#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "agcn/autograd.hpp"
#include "agcn/params.hpp"

namespace agcn {

enum class BlockKind { basic, bottleneck };

/// Residual network standing in for ResNet-50. Strides are fixed: a 7x7
/// stride-2 stem, stage 2 at stride 1, stages 3 to 5 at stride 2 each, no
/// max-pool.
struct BackboneConfig {
  int in_channels = 3;
  std::array<int, 5> stage_channels{64, 256, 512, 1024, 2048};  // stem, stages 2..5
  std::array<int, 4> blocks_per_stage{3, 4, 6, 3};
  BlockKind block = BlockKind::bottleneck;

  // Throws ConfigError on non-positive counts or c4/c5 not divisible by 4.
  void validate() const;

  static BackboneConfig full(int in_channels);
  static BackboneConfig tiny(int in_channels);
};

struct FeaturePyramid {
  Var f_m4;       // [N,c4,H4,W4]
  Var f_m5;       // [N,c5,H5,W5]
  Var embedding;  // [N,c5], global average of f_m5
};

// Spatial size after the stem and each stage, for an input of h x w.
struct StageDims {
  std::array<std::size_t, 5> h;
  std::array<std::size_t, 5> w;
};
StageDims backbone_stage_dims(std::size_t h, std::size_t w);

class Backbone {
 public:
  // Registers every weight under "backbone.*" with seeded uniform He fan-in
  // initialisation; affine scales start at 1 and shifts at 0.
  // Every conv output is standardized per sample before its affine, so the
  // net trains at lr 0.01 without batch statistics.
  Backbone(const BackboneConfig& config, ParamRegistry& registry, std::uint64_t seed);

  // x is [N,in_channels,H,W].
  FeaturePyramid forward(Tape& tape, Var x) const;

  const BackboneConfig& config() const { return config_; }

 private:
  struct Affine {
    Parameter* scale;
    Parameter* shift;
  };
  struct Conv {
    Parameter* weight;
    Affine norm;
    int stride;
    int padding;
  };
  struct Block {
    std::vector<Conv> path;  // relu between entries
    bool has_shortcut = false;
    Conv shortcut{};
  };

  Var apply(Tape& tape, const Conv& conv, Var x) const;
  Var apply_block(Tape& tape, const Block& block, Var x) const;

  BackboneConfig config_;
  Conv stem_{};
  std::array<std::vector<Block>, 4> stages_;
};

}  // namespace agcn

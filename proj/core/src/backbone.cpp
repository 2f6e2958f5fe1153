#include "agcn/backbone.hpp"

#include <cmath>
#include <string>

#include "agcn/error.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"

namespace agcn {

void BackboneConfig::validate() const {
  if (in_channels < 1) throw ConfigError("backbone: in_channels must be positive");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("backbone: stage channel counts must be positive");
  }
  for (int b : blocks_per_stage) {
    if (b < 1) throw ConfigError("backbone: every stage needs at least one block");
  }
  if (stage_channels[3] % 4 != 0 || stage_channels[4] % 4 != 0) {
    throw ConfigError("backbone: c4=" + std::to_string(stage_channels[3]) + " and c5=" +
                      std::to_string(stage_channels[4]) + " must be divisible by 4");
  }
  if (block == BlockKind::bottleneck) {
    for (std::size_t s = 1; s < 5; ++s) {
      if (stage_channels[s] % 4 != 0) {
        throw ConfigError("backbone: bottleneck stage width " + std::to_string(stage_channels[s]) +
                          " must be divisible by 4");
      }
    }
  }
}

BackboneConfig BackboneConfig::full(int in_channels) {
  BackboneConfig c;
  c.in_channels = in_channels;
  return c;
}

BackboneConfig BackboneConfig::tiny(int in_channels) {
  BackboneConfig c;
  c.in_channels = in_channels;
  c.stage_channels = {4, 8, 8, 16, 32};
  c.blocks_per_stage = {1, 1, 1, 1};
  c.block = BlockKind::basic;
  return c;
}

StageDims backbone_stage_dims(std::size_t h, std::size_t w) {
  StageDims d{};
  // 7x7 stride 2 pad 3, then stride 1, 2, 2, 2 with 3x3 pad 1.
  d.h[0] = (h + 6 - 7) / 2 + 1;
  d.w[0] = (w + 6 - 7) / 2 + 1;
  d.h[1] = d.h[0];
  d.w[1] = d.w[0];
  for (std::size_t s = 2; s < 5; ++s) {
    d.h[s] = (d.h[s - 1] - 1) / 2 + 1;
    d.w[s] = (d.w[s - 1] - 1) / 2 + 1;
  }
  return d;
}

namespace {

Tensor he_uniform(Shape shape, Rng& rng) {
  std::size_t fan_in = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Backbone::Backbone(const BackboneConfig& config, ParamRegistry& registry, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);

  auto make_conv = [&](const std::string& name, int out_c, int in_c, int k, int stride) {
    const auto o = static_cast<std::size_t>(out_c);
    Conv conv{};
    conv.weight = &registry.add(name + ".weight",
                                he_uniform({o, static_cast<std::size_t>(in_c), static_cast<std::size_t>(k),
                                            static_cast<std::size_t>(k)}, rng));
    conv.norm.scale = &registry.add(name + ".norm.scale", Tensor::full({o}, 1.0));
    conv.norm.shift = &registry.add(name + ".norm.shift", Tensor::zeros({o}));
    conv.stride = stride;
    conv.padding = k / 2;
    return conv;
  };

  const auto& ch = config_.stage_channels;
  stem_ = make_conv("backbone.conv1", ch[0], config_.in_channels, 7, 2);

  int in_c = ch[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const int out_c = ch[s + 1];
    for (int b = 0; b < config_.blocks_per_stage[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      const std::string prefix = "backbone.layer" + std::to_string(s + 2) + "." + std::to_string(b);
      Block block;
      if (config_.block == BlockKind::basic) {
        block.path.push_back(make_conv(prefix + ".conv1", out_c, in_c, 3, stride));
        block.path.push_back(make_conv(prefix + ".conv2", out_c, out_c, 3, 1));
      } else {
        const int mid = out_c / 4;
        block.path.push_back(make_conv(prefix + ".conv1", mid, in_c, 1, 1));
        block.path.push_back(make_conv(prefix + ".conv2", mid, mid, 3, stride));
        block.path.push_back(make_conv(prefix + ".conv3", out_c, mid, 1, 1));
      }
      if (stride != 1 || in_c != out_c) {
        block.has_shortcut = true;
        block.shortcut = make_conv(prefix + ".down", out_c, in_c, 1, stride);
      }
      stages_[s].push_back(std::move(block));
      in_c = out_c;
    }
  }
}

Var Backbone::apply(Tape& tape, const Conv& conv, Var x) const {
  Var y = ops::conv2d(x, tape.parameter(*conv.weight), std::nullopt, conv.stride, conv.padding);
  y = ops::sample_norm(y, 1e-5);
  return ops::channel_affine(y, tape.parameter(*conv.norm.scale), tape.parameter(*conv.norm.shift));
}

Var Backbone::apply_block(Tape& tape, const Block& block, Var x) const {
  Var y = x;
  for (std::size_t i = 0; i < block.path.size(); ++i) {
    y = apply(tape, block.path[i], y);
    if (i + 1 < block.path.size()) y = ops::relu(y);
  }
  Var skip = block.has_shortcut ? apply(tape, block.shortcut, x) : x;
  return ops::relu(ops::add(y, skip));
}

FeaturePyramid Backbone::forward(Tape& tape, Var x) const {
  const Shape& s = x.shape();
  if (s.size() != 4) throw ConfigError("backbone: input must be [N,C,H,W], got " + shape_str(s));
  if (s[1] != static_cast<std::size_t>(config_.in_channels)) {
    throw ConfigError("backbone: input has " + std::to_string(s[1]) + " channels, config expects " +
                      std::to_string(config_.in_channels));
  }
  if (s[2] < 4 || s[3] < 4) {
    throw ConfigError("backbone: input " + shape_str(s) + " too small for the stride chain");
  }
  Var y = ops::relu(apply(tape, stem_, x));
  Var f_m4;
  for (std::size_t st = 0; st < 4; ++st) {
    for (const Block& block : stages_[st]) y = apply_block(tape, block, y);
    if (st == 2) f_m4 = y;
  }
  return {f_m4, y, ops::global_avg_pool(y)};
}

}  // namespace agcn

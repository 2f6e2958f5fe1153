#include "agcn/fusion.hpp"

#include <cmath>
#include <string>

#include "agcn/error.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"

namespace agcn {

AttentionFusion::AttentionFusion(int c4, int c5, ParamRegistry& registry, std::uint64_t seed)
    : c4_(c4), c5_(c5) {
  if (c4 < 1 || c5 < 1) throw ConfigError("afm: channel counts must be positive");
  Rng rng(seed);
  const auto n4 = static_cast<std::size_t>(c4), n5 = static_cast<std::size_t>(c5);
  auto uniform = [&](Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
  };
  proj_ = &registry.add("afm.proj.weight", uniform({n4, n5}, n5));
  gate_weight_ = &registry.add("afm.gate.weight", uniform({n4, 2 * n4}, 2 * n4));
  gate_bias_ = &registry.add("afm.gate.bias", Tensor::zeros({n4}));
}

Var AttentionFusion::forward(Tape& tape, Var f_m4, Var f_m5) const {
  const Shape& s4 = f_m4.shape();
  const Shape& s5 = f_m5.shape();
  if (s4.size() != 4 || s5.size() != 4 || s4[0] != s5[0]) {
    throw ConfigError("afm: expected [N,C,H,W] maps, got " + shape_str(s4) + " and " + shape_str(s5));
  }
  if (s4[1] != static_cast<std::size_t>(c4_) || s5[1] != static_cast<std::size_t>(c5_)) {
    throw ConfigError("afm: channel mismatch, expected c4=" + std::to_string(c4_) + " c5=" +
                      std::to_string(c5_) + ", got " + shape_str(s4) + " and " + shape_str(s5));
  }
  if (s5[2] != (s4[2] + 1) / 2 || s5[3] != (s4[3] + 1) / 2) {
    throw ConfigError("afm: f_m5 spatial dims " + shape_str(s5) + " are not the ceil-half of " +
                      shape_str(s4));
  }
  const std::size_t n = s4[0], h = s4[2], w = s4[3];

  Var u = ops::bilinear_upsample(f_m5, h, w);
  Var p = ops::conv1x1(ops::reshape(u, {n, s5[1], h * w}), tape.parameter(*proj_));
  p = ops::reshape(p, {n, s4[1], h, w});
  Var pooled = ops::global_avg_pool(ops::concat_axis1(f_m4, p));
  Var alpha = ops::sigmoid(ops::linear(pooled, tape.parameter(*gate_weight_), tape.parameter(*gate_bias_)));
  return ops::channel_gate_mix(alpha, f_m4, p);
}

}  // namespace agcn

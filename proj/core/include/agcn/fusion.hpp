#pragma once

#include <cstdint>

#include "agcn/autograd.hpp"
#include "agcn/params.hpp"

namespace agcn {

/// Gated fusion of the two deepest backbone maps into one refined map at
/// the finer resolution:
///
///   u     = bilinear_upsample(f_m5 -> H4 x W4)
///   p     = conv1x1(u -> c4)
///   alpha = sigmoid(W_g * global_avg_pool(concat(f_m4, p)) + b_g)   [N,c4]
///   out   = alpha * f_m4 + (1 - alpha) * p
///
/// alpha is one gate per channel, constant over space. Parameters live under
/// "afm.*".
class AttentionFusion {
 public:
  AttentionFusion(int c4, int c5, ParamRegistry& registry, std::uint64_t seed);

  // f_m5's spatial dims must be the ceil-half of f_m4's.
  Var forward(Tape& tape, Var f_m4, Var f_m5) const;

  Parameter& gate_bias() const { return *gate_bias_; }

 private:
  int c4_;
  int c5_;
  Parameter* proj_;
  Parameter* gate_weight_;
  Parameter* gate_bias_;
};

}  // namespace agcn

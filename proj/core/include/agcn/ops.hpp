#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "agcn/autograd.hpp"

// Differentiable operations recorded on a Tape. Each mirrors a kernel in
// kernels.hpp and adds its reverse-mode rule.
namespace agcn::ops {

Var conv2d(Var x, Var weight, std::optional<Var> bias, int stride, int padding);

// x [N,C_in,K], weight [C_out,C_in] -> [N,C_out,K]
Var conv1x1(Var x, Var weight);

// Per-node linear map over the last axis: x [N,K,C_in], weight [C_out,C_in]
// -> [N,K,C_out]. Same map as conv1x1 in node-major layout.
Var node_linear(Var x, Var weight);

// x [N,C], weight [O,C], bias [O] -> [N,O]
Var linear(Var x, Var weight, std::optional<Var> bias);

Var matmul(Var a, Var b);
Var relu(Var x);
Var sigmoid(Var x);
Var add(Var a, Var b);
Var scale(Var x, double factor);
Var reshape(Var x, Shape shape);

// Per-channel scale and shift of x [N,C,H,W] by [C] vectors.
Var channel_affine(Var x, Var scale, Var shift);

// Standardizes each sample over all of its non-batch elements:
// (x - mean) / sqrt(var + eps), statistics per batch item.
Var sample_norm(Var x, double eps);

Var global_avg_pool(Var x);
Var bilinear_upsample(Var x, std::size_t out_h, std::size_t out_w);

// Concatenate along axis 1; all other dims must agree.
Var concat_axis1(Var a, Var b);

// alpha [N,C] held constant over space: alpha * a + (1 - alpha) * b for
// a, b [N,C,H,W].
Var channel_gate_mix(Var alpha, Var a, Var b);

// Feature vectors at the given flat spatial positions: f [N,C,H,W] ->
// [N,K,C]; positions[n] lists K flat indices for batch item n.
Var gather_nodes(Var f, const std::vector<std::vector<std::size_t>>& positions);

// Per batch item: out[n] = props[n] * x[n] for x [N,K,C], props[n] [K,K].
Var graph_propagate(Var x, const std::vector<Tensor>& props);

// Scalar mean cross-entropy over the batch.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

}  // namespace agcn::ops

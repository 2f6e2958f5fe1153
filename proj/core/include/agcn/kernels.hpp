#pragma once

#include <cstddef>
#include <span>

#include "agcn/tensor.hpp"

// Forward numeric kernels on plain tensors, plus the backward helpers the
// differentiable ops in ops.hpp are built from.
namespace agcn::kernels {

// c[m,n] = op(a) * op(b) (+ c when accumulate). Row-major storage; op(a) is
// m x k and op(b) is k x n.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate);

struct Conv2dGeometry {
  std::size_t batch, in_channels, in_h, in_w;
  std::size_t out_channels, kernel_h, kernel_w;
  std::size_t stride, padding;
  std::size_t out_h, out_w;
};

// Validates input [N,C,H,W] against weight [O,C,kh,kw]; throws ConfigError
// naming the offending dims.
Conv2dGeometry conv2d_geometry(const Shape& input, const Shape& weight, int stride, int padding);

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride,
              int padding);

// Accumulates into whichever gradient pointers are non-null.
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                     int stride, int padding, Tensor* grad_input, Tensor* grad_weight,
                     Tensor* grad_bias);

// input [N,C_in,K], weight [C_out,C_in] -> [N,C_out,K].
Tensor conv1x1(const Tensor& input, const Tensor& weight);

// a [M,K], b [K,N] -> [M,N].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// [N,C,H,W] -> [N,C]
Tensor global_avg_pool(const Tensor& x);

// Half-pixel-centre bilinear resampling of [N,C,H,W] to [N,C,out_h,out_w],
// source coordinates clamped to the border.
Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w);
void bilinear_upsample_backward(const Tensor& grad_out, Tensor& grad_in);

// Row-wise softmax of [N,L].
Tensor softmax(const Tensor& logits);

// Mean negative log-likelihood; labels must lie in [0, L).
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace agcn::kernels

#include "agcn/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "agcn/error.hpp"

namespace agcn::kernels {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

// Expands one image [C,H,W] into columns [C*kh*kw, Ho*Wo].
void im2col(const double* img, const Conv2dGeometry& g, double* col) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        double* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          double* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = img + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.in_w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const Conv2dGeometry& g, double* img) {
  const std::size_t cols = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const double* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          double* dst = img + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          const double* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix >= 0 && ix < static_cast<long>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const Conv2dGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.padding == 0;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  MutMap out(c, M, N);
  if (!accumulate) out.setZero();
  if (k == 0) return;
  if (!trans_a && !trans_b) {
    out.noalias() += ConstMap(a, M, K) * ConstMap(b, K, N);
  } else if (trans_a && !trans_b) {
    out.noalias() += ConstMap(a, K, M).transpose() * ConstMap(b, K, N);
  } else if (!trans_a && trans_b) {
    out.noalias() += ConstMap(a, M, K) * ConstMap(b, N, K).transpose();
  } else {
    out.noalias() += ConstMap(a, K, M).transpose() * ConstMap(b, N, K).transpose();
  }
}

Conv2dGeometry conv2d_geometry(const Shape& input, const Shape& weight, int stride, int padding) {
  if (input.size() != 4) throw ConfigError("conv2d: input must be [N,C,H,W], got " + shape_str(input));
  if (weight.size() != 4) {
    throw ConfigError("conv2d: weight must be [O,C,kh,kw], got " + shape_str(weight));
  }
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0, got " + std::to_string(padding));
  if (input[1] != weight[1]) {
    throw ConfigError("conv2d: input channels C=" + std::to_string(input[1]) +
                      " do not match weight channels " + std::to_string(weight[1]));
  }
  Conv2dGeometry g{};
  g.batch = input[0];
  g.in_channels = input[1];
  g.in_h = input[2];
  g.in_w = input[3];
  g.out_channels = weight[0];
  g.kernel_h = weight[2];
  g.kernel_w = weight[3];
  g.stride = static_cast<std::size_t>(stride);
  g.padding = static_cast<std::size_t>(padding);
  const std::size_t ph = g.in_h + 2 * g.padding;
  const std::size_t pw = g.in_w + 2 * g.padding;
  if (g.kernel_h > ph || g.kernel_w > pw) {
    throw ConfigError("conv2d: kernel " + std::to_string(g.kernel_h) + "x" +
                      std::to_string(g.kernel_w) + " exceeds padded input " + std::to_string(ph) +
                      "x" + std::to_string(pw));
  }
  g.out_h = (ph - g.kernel_h) / g.stride + 1;
  g.out_w = (pw - g.kernel_w) / g.stride + 1;
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias, int stride,
              int padding) {
  const auto g = conv2d_geometry(input.shape(), weight.shape(), stride, padding);
  if (bias && bias->shape() != Shape{g.out_channels}) {
    throw ConfigError("conv2d: bias must be [" + std::to_string(g.out_channels) + "], got " +
                      shape_str(bias->shape()));
  }
  Tensor out({g.batch, g.out_channels, g.out_h, g.out_w});
  const std::size_t rows = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t cols = g.out_h * g.out_w;
  const bool pointwise = is_pointwise(g);
  std::vector<double> col(pointwise ? 0 : rows * cols);
  for (std::size_t n = 0; n < g.batch; ++n) {
    const double* img = input.data().data() + n * g.in_channels * g.in_h * g.in_w;
    const double* src = img;
    if (!pointwise) {
      im2col(img, g, col.data());
      src = col.data();
    }
    double* dst = out.data().data() + n * g.out_channels * cols;
    gemm(false, false, g.out_channels, cols, rows, weight.data().data(), src, dst, false);
    if (bias) {
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        const double b = (*bias)[o];
        for (std::size_t p = 0; p < cols; ++p) dst[o * cols + p] += b;
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                     int stride, int padding, Tensor* grad_input, Tensor* grad_weight,
                     Tensor* grad_bias) {
  const auto g = conv2d_geometry(input.shape(), weight.shape(), stride, padding);
  const std::size_t rows = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t cols = g.out_h * g.out_w;
  const bool pointwise = is_pointwise(g);
  std::vector<double> col(pointwise ? 0 : rows * cols);
  std::vector<double> dcol(pointwise || !grad_input ? 0 : rows * cols);
  for (std::size_t n = 0; n < g.batch; ++n) {
    const double* img = input.data().data() + n * g.in_channels * g.in_h * g.in_w;
    const double* dy = grad_out.data().data() + n * g.out_channels * cols;
    if (grad_weight) {
      const double* src = img;
      if (!pointwise) {
        im2col(img, g, col.data());
        src = col.data();
      }
      gemm(false, true, g.out_channels, rows, cols, dy, src, grad_weight->data().data(), true);
    }
    if (grad_input) {
      double* dimg = grad_input->data().data() + n * g.in_channels * g.in_h * g.in_w;
      if (pointwise) {
        gemm(true, false, rows, cols, g.out_channels, weight.data().data(), dy, dimg, true);
      } else {
        gemm(true, false, rows, cols, g.out_channels, weight.data().data(), dy, dcol.data(), false);
        col2im_add(dcol.data(), g, dimg);
      }
    }
    if (grad_bias) {
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        double s = 0.0;
        for (std::size_t p = 0; p < cols; ++p) s += dy[o * cols + p];
        (*grad_bias)[o] += s;
      }
    }
  }
}

Tensor conv1x1(const Tensor& input, const Tensor& weight) {
  require_rank(input, 3, "conv1x1 input");
  require_rank(weight, 2, "conv1x1 weight");
  const std::size_t n = input.dim(0), cin = input.dim(1), k = input.dim(2);
  const std::size_t cout = weight.dim(0);
  if (weight.dim(1) != cin) {
    throw ConfigError("conv1x1: weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, input has " + std::to_string(cin));
  }
  Tensor out({n, cout, k});
  for (std::size_t b = 0; b < n; ++b) {
    gemm(false, false, cout, k, cin, weight.data().data(), input.data().data() + b * cin * k,
         out.data().data() + b * cout * k, false);
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    throw ConfigError("matmul: inner dims differ " + shape_str(a.shape()) + " x " +
                      shape_str(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  gemm(false, false, a.dim(0), b.dim(1), a.dim(1), a.data().data(), b.data().data(),
       out.data().data(), false);
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) {
    // Split by sign so exp never overflows.
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor out({n, c});
  const double* src = x.data().data();
  for (std::size_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < hw; ++p) s += src[i * hw + p];
    out[i] = s / static_cast<double>(hw);
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 4, "bilinear_upsample");
  if (out_h == 0 || out_w == 0) throw ConfigError("bilinear_upsample: output dims must be positive");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  Tensor out({x.dim(0), x.dim(1), out_h, out_w});
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data().data() + p * h * w;
    double* dst = out.data().data() + p * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const auto& y = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const auto& xx = tx[ox];
        const double top = src[y.lo * w + xx.lo] * (1.0 - xx.frac) + src[y.lo * w + xx.hi] * xx.frac;
        const double bot = src[y.hi * w + xx.lo] * (1.0 - xx.frac) + src[y.hi * w + xx.hi] * xx.frac;
        dst[oy * out_w + ox] = top * (1.0 - y.frac) + bot * y.frac;
      }
    }
  }
  return out;
}

void bilinear_upsample_backward(const Tensor& grad_out, Tensor& grad_in) {
  const std::size_t planes = grad_in.dim(0) * grad_in.dim(1);
  const std::size_t h = grad_in.dim(2), w = grad_in.dim(3);
  const std::size_t out_h = grad_out.dim(2), out_w = grad_out.dim(3);
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* go = grad_out.data().data() + p * out_h * out_w;
    double* gi = grad_in.data().data() + p * h * w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const auto& y = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const auto& xx = tx[ox];
        const double g = go[oy * out_w + ox];
        gi[y.lo * w + xx.lo] += g * (1.0 - y.frac) * (1.0 - xx.frac);
        gi[y.lo * w + xx.hi] += g * (1.0 - y.frac) * xx.frac;
        gi[y.hi * w + xx.lo] += g * y.frac * (1.0 - xx.frac);
        gi[y.hi * w + xx.hi] += g * y.frac * xx.frac;
      }
    }
  }
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t n = logits.dim(0), l = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data().data() + i * l;
    double* dst = out.data().data() + i * l;
    const double mx = *std::max_element(row, row + l);
    double sum = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      dst[j] = std::exp(row[j] - mx);
      sum += dst[j];
    }
    for (std::size_t j = 0; j < l; ++j) dst[j] /= sum;
  }
  return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::size_t n = logits.dim(0), l = logits.dim(1);
  if (labels.size() != n) {
    throw ConfigError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                      " labels for batch of " + std::to_string(n));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= l) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range [0, " +
                      std::to_string(l) + ")");
    }
    const double* row = logits.data().data() + i * l;
    const double mx = *std::max_element(row, row + l);
    double sum = 0.0;
    for (std::size_t j = 0; j < l; ++j) sum += std::exp(row[j] - mx);
    total += mx + std::log(sum) - row[labels[i]];
  }
  return total / static_cast<double>(n);
}

}  // namespace agcn::kernels

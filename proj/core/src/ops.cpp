#include "agcn/ops.hpp"

#include <cmath>
#include <string>

#include "agcn/error.hpp"
#include "agcn/kernels.hpp"

namespace agcn::ops {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var conv2d(Var x, Var weight, std::optional<Var> bias, int stride, int padding) {
  const Tensor* b = bias ? &bias->value() : nullptr;
  Tensor out = kernels::conv2d(x.value(), weight.value(), b, stride, padding);
  const std::size_t xi = x.id(), wi = weight.id();
  const std::optional<std::size_t> bi = bias ? std::optional(bias->id()) : std::nullopt;
  auto backward = [xi, wi, bi, stride, padding](Tape& t, const Tensor& g) {
    Tensor* gx = t.requires_grad(xi) ? &t.grad_of(xi) : nullptr;
    Tensor* gw = t.requires_grad(wi) ? &t.grad_of(wi) : nullptr;
    Tensor* gb = bi && t.requires_grad(*bi) ? &t.grad_of(*bi) : nullptr;
    kernels::conv2d_backward(t.value(xi), t.value(wi), g, stride, padding, gx, gw, gb);
  };
  if (bias) return x.tape().record(std::move(out), {x, weight, *bias}, backward);
  return x.tape().record(std::move(out), {x, weight}, backward);
}

Var conv1x1(Var x, Var weight) {
  Tensor out = kernels::conv1x1(x.value(), weight.value());
  const std::size_t xi = x.id(), wi = weight.id();
  return x.tape().record(std::move(out), {x, weight}, [xi, wi](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(xi);
    const Tensor& wv = t.value(wi);
    const std::size_t n = xv.dim(0), cin = xv.dim(1), k = xv.dim(2), cout = wv.dim(0);
    for (std::size_t b = 0; b < n; ++b) {
      const double* gb = g.data().data() + b * cout * k;
      if (t.requires_grad(wi)) {
        kernels::gemm(false, true, cout, cin, k, gb, xv.data().data() + b * cin * k,
                      t.grad_of(wi).data().data(), true);
      }
      if (t.requires_grad(xi)) {
        kernels::gemm(true, false, cin, k, cout, wv.data().data(), gb,
                      t.grad_of(xi).data().data() + b * cin * k, true);
      }
    }
  });
}

Var node_linear(Var x, Var weight) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require_rank(xv, 3, "node_linear input");
  require_rank(wv, 2, "node_linear weight");
  const std::size_t n = xv.dim(0), k = xv.dim(1), cin = xv.dim(2), cout = wv.dim(0);
  if (wv.dim(1) != cin) {
    throw ConfigError("node_linear: weight expects " + std::to_string(wv.dim(1)) +
                      " input channels, input has " + std::to_string(cin));
  }
  Tensor out({n, k, cout});
  kernels::gemm(false, true, n * k, cout, cin, xv.data().data(), wv.data().data(),
                out.data().data(), false);
  const std::size_t xi = x.id(), wi = weight.id();
  return x.tape().record(std::move(out), {x, weight}, [xi, wi, n, k, cin, cout](Tape& t, const Tensor& g) {
    if (t.requires_grad(wi)) {
      kernels::gemm(true, false, cout, cin, n * k, g.data().data(), t.value(xi).data().data(),
                    t.grad_of(wi).data().data(), true);
    }
    if (t.requires_grad(xi)) {
      kernels::gemm(false, false, n * k, cin, cout, g.data().data(), t.value(wi).data().data(),
                    t.grad_of(xi).data().data(), true);
    }
  });
}

Var linear(Var x, Var weight, std::optional<Var> bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require_rank(xv, 2, "linear input");
  require_rank(wv, 2, "linear weight");
  const std::size_t n = xv.dim(0), cin = xv.dim(1), cout = wv.dim(0);
  if (wv.dim(1) != cin) {
    throw ConfigError("linear: weight expects " + std::to_string(wv.dim(1)) +
                      " features, input has " + std::to_string(cin));
  }
  if (bias) require_same_shape(bias->shape(), Shape{cout}, "linear bias");
  Tensor out({n, cout});
  kernels::gemm(false, true, n, cout, cin, xv.data().data(), wv.data().data(), out.data().data(),
                false);
  if (bias) {
    const Tensor& bv = bias->value();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < cout; ++o) out[i * cout + o] += bv[o];
    }
  }
  const std::size_t xi = x.id(), wi = weight.id();
  const std::optional<std::size_t> bi = bias ? std::optional(bias->id()) : std::nullopt;
  auto backward = [xi, wi, bi, n, cin, cout](Tape& t, const Tensor& g) {
    if (t.requires_grad(wi)) {
      kernels::gemm(true, false, cout, cin, n, g.data().data(), t.value(xi).data().data(),
                    t.grad_of(wi).data().data(), true);
    }
    if (t.requires_grad(xi)) {
      kernels::gemm(false, false, n, cin, cout, g.data().data(), t.value(wi).data().data(),
                    t.grad_of(xi).data().data(), true);
    }
    if (bi && t.requires_grad(*bi)) {
      Tensor& gb = t.grad_of(*bi);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < cout; ++o) gb[o] += g[i * cout + o];
      }
    }
  };
  if (bias) return x.tape().record(std::move(out), {x, weight, *bias}, backward);
  return x.tape().record(std::move(out), {x, weight}, backward);
}

Var matmul(Var a, Var b) {
  Tensor out = kernels::matmul(a.value(), b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    if (t.requires_grad(ai)) {
      kernels::gemm(false, true, m, k, n, g.data().data(), bv.data().data(),
                    t.grad_of(ai).data().data(), true);
    }
    if (t.requires_grad(bi)) {
      kernels::gemm(true, false, k, n, m, av.data().data(), g.data().data(),
                    t.grad_of(bi).data().data(), true);
    }
  });
}

Var relu(Var x) {
  Tensor out = kernels::relu(x.value());
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, const Tensor& g) {
    const auto xv = t.value(xi).data();
    auto gx = t.grad_of(xi).data();
    // Subgradient at exactly zero is zero.
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var sigmoid(Var x) {
  Tensor out = kernels::sigmoid(x.value());
  const std::size_t xi = x.id();
  // The node about to be recorded; its value is s, and ds/dx = s * (1 - s).
  const std::size_t yi = x.tape().size();
  return x.tape().record(std::move(out), {x}, [xi, yi](Tape& t, const Tensor& g) {
    const auto y = t.value(yi).data();
    auto gx = t.grad_of(xi).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor out = a.value();
  add_into(out, b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, const Tensor& g) {
    if (t.requires_grad(ai)) add_into(t.grad_of(ai), g);
    if (t.requires_grad(bi)) add_into(t.grad_of(bi), g);
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi, factor](Tape& t, const Tensor& g) {
    auto gx = t.grad_of(xi).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, const Tensor& g) {
    auto gx = t.grad_of(xi).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

Var channel_affine(Var x, Var scale, Var shift) {
  const Tensor& xv = x.value();
  require_rank(xv, 4, "channel_affine");
  const std::size_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  require_same_shape(scale.shape(), Shape{c}, "channel_affine scale");
  require_same_shape(shift.shape(), Shape{c}, "channel_affine shift");
  Tensor out = xv;
  const Tensor& sv = scale.value();
  const Tensor& bv = shift.value();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = out.data().data() + (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] = p[i] * sv[ch] + bv[ch];
    }
  }
  const std::size_t xi = x.id(), si = scale.id(), bi = shift.id();
  return x.tape().record(std::move(out), {x, scale, shift},
                         [xi, si, bi, n, c, hw](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(xi);
    const Tensor& sv = t.value(si);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t base = (b * c + ch) * hw;
        double gs = 0.0, gsum = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          gs += g[base + i] * xv[base + i];
          gsum += g[base + i];
        }
        if (t.requires_grad(si)) t.grad_of(si)[ch] += gs;
        if (t.requires_grad(bi)) t.grad_of(bi)[ch] += gsum;
        if (t.requires_grad(xi)) {
          double* gx = t.grad_of(xi).data().data() + base;
          for (std::size_t i = 0; i < hw; ++i) gx[i] += g[base + i] * sv[ch];
        }
      }
    }
  });
}

Var sample_norm(Var x, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2) throw DataError("sample_norm: expected a batched tensor, got " + shape_str(xv.shape()));
  const std::size_t n = xv.dim(0), m = xv.numel() / n;
  Tensor out(xv.shape());
  std::vector<double> inv_std(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double* p = xv.data().data() + b * m;
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += p[i];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(m);
    inv_std[b] = 1.0 / std::sqrt(var + eps);
    double* o = out.data().data() + b * m;
    for (std::size_t i = 0; i < m; ++i) o[i] = (p[i] - mean) * inv_std[b];
  }
  Tape& tape = x.tape();
  const std::size_t xi = x.id(), yi = tape.size();
  return tape.record(std::move(out), {x}, [xi, yi, n, m, inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(yi);
    Tensor& gx = t.grad_of(xi);
    for (std::size_t b = 0; b < n; ++b) {
      const double* gb = g.data().data() + b * m;
      const double* yb = y.data().data() + b * m;
      double g_mean = 0.0, gy_mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        g_mean += gb[i];
        gy_mean += gb[i] * yb[i];
      }
      g_mean /= static_cast<double>(m);
      gy_mean /= static_cast<double>(m);
      double* out = gx.data().data() + b * m;
      for (std::size_t i = 0; i < m; ++i) out[i] += (gb[i] - g_mean - yb[i] * gy_mean) * inv_std[b];
    }
  });
}

Var global_avg_pool(Var x) {
  Tensor out = kernels::global_avg_pool(x.value());
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_of(xi);
    const std::size_t hw = gx.dim(2) * gx.dim(3);
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      double* p = gx.data().data() + i * hw;
      for (std::size_t j = 0; j < hw; ++j) p[j] += g[i] * inv;
    }
  });
}

Var bilinear_upsample(Var x, std::size_t out_h, std::size_t out_w) {
  Tensor out = kernels::bilinear_upsample(x.value(), out_h, out_w);
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape& t, const Tensor& g) {
    kernels::bilinear_upsample_backward(g, t.grad_of(xi));
  });
}

Var concat_axis1(Var a, Var b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sa.size() != sb.size() || sa[0] != sb[0]) {
    throw ConfigError("concat: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
  }
  std::size_t inner = 1;
  for (std::size_t i = 2; i < sa.size(); ++i) {
    if (sa[i] != sb[i]) {
      throw ConfigError("concat: trailing dims differ " + shape_str(sa) + " vs " + shape_str(sb));
    }
    inner *= sa[i];
  }
  const std::size_t n = sa[0], la = sa[1] * inner, lb = sb[1] * inner;
  Shape so = sa;
  so[1] = sa[1] + sb[1];
  Tensor out(so);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.value().data().data() + i * la, la, out.data().data() + i * (la + lb));
    std::copy_n(b.value().data().data() + i * lb, lb, out.data().data() + i * (la + lb) + la);
  }
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi, n, la, lb](Tape& t, const Tensor& g) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* src = g.data().data() + i * (la + lb);
      if (t.requires_grad(ai)) {
        double* d = t.grad_of(ai).data().data() + i * la;
        for (std::size_t j = 0; j < la; ++j) d[j] += src[j];
      }
      if (t.requires_grad(bi)) {
        double* d = t.grad_of(bi).data().data() + i * lb;
        for (std::size_t j = 0; j < lb; ++j) d[j] += src[la + j];
      }
    }
  });
}

Var channel_gate_mix(Var alpha, Var a, Var b) {
  require_same_shape(a.shape(), b.shape(), "channel_gate_mix");
  const Tensor& av = a.value();
  require_rank(av, 4, "channel_gate_mix");
  const std::size_t n = av.dim(0), c = av.dim(1), hw = av.dim(2) * av.dim(3);
  require_same_shape(alpha.shape(), Shape{n, c}, "channel_gate_mix gate");
  Tensor out(av.shape());
  const Tensor& gv = alpha.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < n * c; ++i) {
    const double g = gv[i];
    for (std::size_t p = 0; p < hw; ++p) {
      const std::size_t j = i * hw + p;
      out[j] = g * av[j] + (1.0 - g) * bv[j];
    }
  }
  const std::size_t gi = alpha.id(), ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {alpha, a, b}, [gi, ai, bi, n, c, hw](Tape& t, const Tensor& go) {
    const Tensor& gv = t.value(gi);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    for (std::size_t i = 0; i < n * c; ++i) {
      const double g = gv[i];
      double dg = 0.0;
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t j = i * hw + p;
        dg += go[j] * (av[j] - bv[j]);
      }
      if (t.requires_grad(gi)) t.grad_of(gi)[i] += dg;
      if (t.requires_grad(ai)) {
        double* d = t.grad_of(ai).data().data() + i * hw;
        for (std::size_t p = 0; p < hw; ++p) d[p] += go[i * hw + p] * g;
      }
      if (t.requires_grad(bi)) {
        double* d = t.grad_of(bi).data().data() + i * hw;
        for (std::size_t p = 0; p < hw; ++p) d[p] += go[i * hw + p] * (1.0 - g);
      }
    }
  });
}

Var gather_nodes(Var f, const std::vector<std::vector<std::size_t>>& positions) {
  const Tensor& fv = f.value();
  require_rank(fv, 4, "gather_nodes");
  const std::size_t n = fv.dim(0), c = fv.dim(1), hw = fv.dim(2) * fv.dim(3);
  if (positions.size() != n) throw ConfigError("gather_nodes: one position list per batch item required");
  const std::size_t k = n ? positions[0].size() : 0;
  for (const auto& p : positions) {
    if (p.size() != k || k == 0) throw ConfigError("gather_nodes: position lists must share a positive length");
    for (auto idx : p) {
      if (idx >= hw) throw ConfigError("gather_nodes: flat index " + std::to_string(idx) + " out of range");
    }
  }
  Tensor out({n, k, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t node = 0; node < k; ++node) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(b * k + node) * c + ch] = fv[(b * c + ch) * hw + positions[b][node]];
      }
    }
  }
  const std::size_t fi = f.id();
  return f.tape().record(std::move(out), {f}, [fi, positions, n, k, c, hw](Tape& t, const Tensor& g) {
    Tensor& gf = t.grad_of(fi);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t node = 0; node < k; ++node) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          gf[(b * c + ch) * hw + positions[b][node]] += g[(b * k + node) * c + ch];
        }
      }
    }
  });
}

Var graph_propagate(Var x, const std::vector<Tensor>& props) {
  const Tensor& xv = x.value();
  require_rank(xv, 3, "graph_propagate");
  const std::size_t n = xv.dim(0), k = xv.dim(1), c = xv.dim(2);
  if (props.size() != n) throw ConfigError("graph_propagate: one propagation matrix per batch item required");
  for (const auto& p : props) require_same_shape(p.shape(), Shape{k, k}, "graph_propagate matrix");
  Tensor out({n, k, c});
  for (std::size_t b = 0; b < n; ++b) {
    kernels::gemm(false, false, k, c, k, props[b].data().data(), xv.data().data() + b * k * c,
                  out.data().data() + b * k * c, false);
  }
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi, props, n, k, c](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_of(xi);
    for (std::size_t b = 0; b < n; ++b) {
      kernels::gemm(true, false, k, c, k, props[b].data().data(), g.data().data() + b * k * c,
                    gx.data().data() + b * k * c, true);
    }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const double loss = kernels::softmax_cross_entropy(logits.value(), labels);
  std::vector<int> owned(labels.begin(), labels.end());
  const std::size_t li = logits.id();
  return logits.tape().record(Tensor({1}, std::vector<double>{loss}), {logits},
                              [li, owned](Tape& t, const Tensor& g) {
    Tensor p = kernels::softmax(t.value(li));
    const std::size_t n = p.dim(0), l = p.dim(1);
    const double s = g[0] / static_cast<double>(n);
    Tensor& gl = t.grad_of(li);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < l; ++j) {
        const double onehot = static_cast<std::size_t>(owned[i]) == j ? 1.0 : 0.0;
        gl[i * l + j] += s * (p[i * l + j] - onehot);
      }
    }
  });
}

}  // namespace agcn::ops

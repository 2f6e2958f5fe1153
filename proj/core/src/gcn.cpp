#include "agcn/gcn.hpp"

#include <cmath>
#include <string>

#include "agcn/error.hpp"
#include "agcn/kernels.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"

namespace agcn {

namespace {

void check_adjacency(const Tensor& a, const char* what) {
  require_rank(a, 2, what);
  const std::size_t k = a.dim(0);
  if (a.dim(1) != k) throw ConfigError(std::string(what) + ": adjacency must be square, got " + shape_str(a.shape()));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (std::abs(a[i * k + j] - a[j * k + i]) > 1e-12) {
        throw DataError(std::string(what) + ": adjacency asymmetric at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      }
    }
  }
}

std::vector<double> degrees(const Tensor& a) {
  const std::size_t k = a.dim(0);
  std::vector<double> d(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) d[i] += a[i * k + j];
  }
  return d;
}

}  // namespace

Tensor laplacian(const Tensor& a) {
  check_adjacency(a, "laplacian");
  const std::size_t k = a.dim(0);
  const auto d = degrees(a);
  Tensor l({k, k});
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) l[i * k + j] = -a[i * k + j];
    l[i * k + i] += d[i];
  }
  return l;
}

PropagationMatrix propagation_matrix(const Tensor& a) {
  check_adjacency(a, "propagation_matrix");
  const std::size_t k = a.dim(0);
  const auto d = degrees(a);
  std::vector<double> inv_sqrt(k);
  for (std::size_t i = 0; i < k; ++i) inv_sqrt[i] = 1.0 / std::sqrt(d[i] + 1.0);
  PropagationMatrix p{Tensor({k, k})};
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double a_hat = a[i * k + j] + (i == j ? 1.0 : 0.0);
      p.l_norm[i * k + j] = inv_sqrt[i] * a_hat * inv_sqrt[j];
    }
  }
  return p;
}

Tensor gcn_layer(const Tensor& x, const PropagationMatrix& prop, const Tensor& theta) {
  require_rank(x, 3, "gcn_layer input");
  require_rank(theta, 2, "gcn_layer theta");
  const std::size_t n = x.dim(0), k = x.dim(1), cin = x.dim(2), cout = theta.dim(0);
  require_same_shape(prop.l_norm.shape(), Shape{k, k}, "gcn_layer propagation");
  if (theta.dim(1) != cin) {
    throw ConfigError("gcn_layer: theta expects " + std::to_string(theta.dim(1)) + " channels, input has " +
                      std::to_string(cin));
  }
  Tensor mixed({k, cin});
  Tensor out({n, k, cout});
  for (std::size_t b = 0; b < n; ++b) {
    kernels::gemm(false, false, k, cin, k, prop.l_norm.data().data(), x.data().data() + b * k * cin,
                  mixed.data().data(), false);
    kernels::gemm(false, true, k, cout, cin, mixed.data().data(), theta.data().data(),
                  out.data().data() + b * k * cout, false);
  }
  return kernels::relu(out);
}

Tensor graph_readout(const Tensor& y_sag, const Tensor& y_cag) {
  require_same_shape(y_sag.shape(), y_cag.shape(), "graph_readout");
  require_rank(y_sag, 3, "graph_readout");
  const std::size_t n = y_sag.dim(0), len = y_sag.dim(1) * y_sag.dim(2);
  Tensor out({n, 2 * len});
  for (std::size_t b = 0; b < n; ++b) {
    std::copy_n(y_sag.data().data() + b * len, len, out.data().data() + b * 2 * len);
    std::copy_n(y_cag.data().data() + b * len, len, out.data().data() + b * 2 * len + len);
  }
  return out;
}

Var graph_readout(Var y_sag, Var y_cag) {
  require_same_shape(y_sag.shape(), y_cag.shape(), "graph_readout");
  const Shape& s = y_sag.shape();
  if (s.size() != 3) throw ConfigError("graph_readout: expected [N,K,C], got " + shape_str(s));
  const std::size_t n = s[0], len = s[1] * s[2];
  return ops::concat_axis1(ops::reshape(y_sag, {n, len}), ops::reshape(y_cag, {n, len}));
}

GraphConvolution::GraphConvolution(const std::string& prefix, int in_channels, int out_channels,
                                   int layers, ParamRegistry& registry, std::uint64_t seed)
    : out_channels_(out_channels) {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("gcn: channel counts must be positive");
  if (layers < 1) throw ConfigError("gcn: need at least one layer");
  Rng rng(seed);
  int cin = in_channels;
  for (int l = 0; l < layers; ++l) {
    const std::string name = prefix + ".theta" + (l == 0 ? std::string() : std::to_string(l));
    const double bound = std::sqrt(6.0 / cin);
    Tensor w({static_cast<std::size_t>(out_channels), static_cast<std::size_t>(cin)});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    thetas_.push_back(&registry.add(name, std::move(w)));
    cin = out_channels;
  }
}

Var GraphConvolution::forward(Tape& tape, Var x, std::span<const PropagationMatrix> props) const {
  std::vector<Tensor> mats;
  mats.reserve(props.size());
  for (const auto& p : props) mats.push_back(p.l_norm);
  Var y = x;
  for (Parameter* theta : thetas_) {
    y = ops::relu(ops::node_linear(ops::graph_propagate(y, mats), tape.parameter(*theta)));
  }
  return y;
}

}  // namespace agcn

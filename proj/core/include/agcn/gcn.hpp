#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agcn/autograd.hpp"
#include "agcn/params.hpp"

namespace agcn {

// L = D - A with D the diagonal of row sums. `a` must be symmetric to 1e-12
// (DataError otherwise), nonnegative, with zero diagonal.
Tensor laplacian(const Tensor& a);

// (D + I)^-1/2 (A + I) (D + I)^-1/2, D the weighted degree of A. Symmetric
// with spectrum in [-1, 1].
struct PropagationMatrix {
  Tensor l_norm;  // [K,K]
};

PropagationMatrix propagation_matrix(const Tensor& a);

// relu(l_norm * x * theta^T) per batch item; x [N,K,C_in], theta
// [C_out,C_in]. Plain-tensor reference path.
Tensor gcn_layer(const Tensor& x, const PropagationMatrix& prop, const Tensor& theta);

// Flattened salient features followed by flattened contextual features:
// [N,K,C] x 2 -> [N, 2*K*C].
Tensor graph_readout(const Tensor& y_sag, const Tensor& y_cag);
Var graph_readout(Var y_sag, Var y_cag);

/// Stack of graph convolution layers for one graph branch. Layer l owns
/// "<prefix>.theta" (l = 0) or "<prefix>.theta<l>".
class GraphConvolution {
 public:
  GraphConvolution(const std::string& prefix, int in_channels, int out_channels, int layers,
                   ParamRegistry& registry, std::uint64_t seed);

  // x [N,K,C_in]; one propagation matrix per batch item.
  Var forward(Tape& tape, Var x, std::span<const PropagationMatrix> props) const;

  int out_channels() const { return out_channels_; }

 private:
  int out_channels_;
  std::vector<Parameter*> thetas_;
};

}  // namespace agcn

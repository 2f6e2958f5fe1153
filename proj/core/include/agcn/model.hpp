#pragma once

#include <memory>
#include <vector>

#include "agcn/autograd.hpp"
#include "agcn/backbone.hpp"
#include "agcn/config.hpp"
#include "agcn/fusion.hpp"
#include "agcn/gcn.hpp"
#include "agcn/graph.hpp"
#include "agcn/params.hpp"

namespace agcn {

struct ForwardOutput {
  Var logits;            // [N, num_classes]
  Var f_ffr;             // [N, c4, H4, W4]
  Var classifier_input;  // [N, 2*K*C_g + c5]
  std::vector<ScenePair> graphs;
};

/// Backbone, attention fusion, salient/contextual graph branches and the
/// classifier over [graph readout, backbone embedding]. Owns its parameters.
class AgcnModel {
 public:
  explicit AgcnModel(const AgcnConfig& config);

  AgcnModel(const AgcnModel&) = delete;
  AgcnModel& operator=(const AgcnModel&) = delete;

  // batch is [N, in_channels, input_h, input_w].
  ForwardOutput forward(Tape& tape, const Tensor& batch) const;

  // forward() without the classifier; logits is left empty.
  ForwardOutput embed(Tape& tape, const Tensor& batch) const;

  // Runs up to the fused map only.
  Var fused_features(Tape& tape, const Tensor& batch) const;

  ParamRegistry& params() { return *registry_; }
  const ParamRegistry& params() const { return *registry_; }
  const AgcnConfig& config() const { return config_; }

  // Zeroes (or restores) the graph readout without touching the weights.
  void set_graph_branch(bool on) { config_.use_graph_branch = on; }

  std::size_t classifier_input_width() const;

 private:
  AgcnConfig config_;
  std::unique_ptr<ParamRegistry> registry_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<AttentionFusion> fusion_;
  std::unique_ptr<GraphConvolution> salient_gcn_;
  std::unique_ptr<GraphConvolution> contextual_gcn_;
  Parameter* head_weight_ = nullptr;
  Parameter* head_bias_ = nullptr;
};

}  // namespace agcn

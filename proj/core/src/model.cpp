#include "agcn/model.hpp"

#include <cmath>

#include "agcn/error.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"

namespace agcn {

namespace {

// Independent streams per module from the model seed.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed * 0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL + 1;
}

}  // namespace

AgcnModel::AgcnModel(const AgcnConfig& config)
    : config_(config), registry_(std::make_unique<ParamRegistry>()) {
  config_.validate();
  const auto& ch = config_.backbone.stage_channels;
  backbone_ = std::make_unique<Backbone>(config_.backbone, *registry_, sub_seed(config_.seed, 1));
  fusion_ = std::make_unique<AttentionFusion>(ch[3], ch[4], *registry_, sub_seed(config_.seed, 2));
  salient_gcn_ = std::make_unique<GraphConvolution>("gcn.sag", ch[3], config_.gcn_out_channels,
                                                    config_.gcn_layers, *registry_, sub_seed(config_.seed, 3));
  contextual_gcn_ = std::make_unique<GraphConvolution>("gcn.cag", ch[3], config_.gcn_out_channels,
                                                       config_.gcn_layers, *registry_, sub_seed(config_.seed, 4));
  Rng rng(sub_seed(config_.seed, 5));
  const std::size_t width = classifier_input_width();
  const auto classes = static_cast<std::size_t>(config_.num_classes);
  const double bound = std::sqrt(6.0 / static_cast<double>(width));
  Tensor w({classes, width});
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  head_weight_ = &registry_->add("head.weight", std::move(w));
  head_bias_ = &registry_->add("head.bias", Tensor::zeros({classes}));
}

std::size_t AgcnModel::classifier_input_width() const {
  return 2 * static_cast<std::size_t>(config_.k_nodes) * static_cast<std::size_t>(config_.gcn_out_channels) +
         static_cast<std::size_t>(config_.backbone.stage_channels[4]);
}

static void check_model_input(const AgcnConfig& config, const Tensor& batch) {
  if (batch.rank() != 4) throw ConfigError("model input must be [N,C,H,W], got " + shape_str(batch.shape()));
  const Shape expected{batch.dim(0), static_cast<std::size_t>(config.backbone.in_channels), config.input_h,
                       config.input_w};
  if (batch.shape() != expected) {
    throw ConfigError("model input " + shape_str(batch.shape()) + " does not match configured " +
                      to_string(config.modality) + " input " + shape_str(expected));
  }
}

Var AgcnModel::fused_features(Tape& tape, const Tensor& batch) const {
  check_model_input(config_, batch);
  const FeaturePyramid pyr = backbone_->forward(tape, tape.constant(batch));
  return fusion_->forward(tape, pyr.f_m4, pyr.f_m5);
}

ForwardOutput AgcnModel::forward(Tape& tape, const Tensor& batch) const {
  ForwardOutput out = embed(tape, batch);
  out.logits = ops::linear(out.classifier_input, tape.parameter(*head_weight_), tape.parameter(*head_bias_));
  return out;
}

ForwardOutput AgcnModel::embed(Tape& tape, const Tensor& batch) const {
  check_model_input(config_, batch);
  const FeaturePyramid pyr = backbone_->forward(tape, tape.constant(batch));
  Var f_ffr = fusion_->forward(tape, pyr.f_m4, pyr.f_m5);

  const std::size_t n = batch.dim(0);
  const auto k = static_cast<std::size_t>(config_.k_nodes);
  const IntensityMap intensity = intensity_map(f_ffr.value());

  ForwardOutput out;
  std::vector<std::vector<std::size_t>> salient_idx, contextual_idx;
  std::vector<PropagationMatrix> salient_props, contextual_props;
  for (std::size_t b = 0; b < n; ++b) {
    const NodeSelection sel = select_nodes(intensity, b, k);
    ScenePair pair = assemble_scene_pair(sel, intensity.h, intensity.w, k);
    salient_props.push_back(propagation_matrix(pair.salient.adjacency));
    contextual_props.push_back(propagation_matrix(pair.contextual.adjacency));
    salient_idx.push_back(sel.salient);
    contextual_idx.push_back(sel.contextual);
    out.graphs.push_back(std::move(pair));
  }

  Var y_sag = salient_gcn_->forward(tape, ops::gather_nodes(f_ffr, salient_idx), salient_props);
  Var y_cag = contextual_gcn_->forward(tape, ops::gather_nodes(f_ffr, contextual_idx), contextual_props);
  Var readout = graph_readout(y_sag, y_cag);
  if (!config_.use_graph_branch) readout = ops::scale(readout, 0.0);

  out.f_ffr = f_ffr;
  out.classifier_input = ops::concat_axis1(readout, pyr.embedding);
  return out;
}

}  // namespace agcn

#include "agcn/av_model.hpp"

#include <cmath>

#include "agcn/error.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"

namespace agcn {

AudioVisualModel::AudioVisualModel(const AgcnConfig& audio, const AgcnConfig& visual) {
  if (audio.num_classes != visual.num_classes) {
    throw ConfigError("audio-visual model: branches disagree on num_classes (" + std::to_string(audio.num_classes) +
                      " vs " + std::to_string(visual.num_classes) + ")");
  }
  audio_ = std::make_unique<AgcnModel>(audio);
  visual_ = std::make_unique<AgcnModel>(visual);
  Rng rng(visual.seed * 0x9E3779B97F4A7C15ULL + 0xA5);
  const std::size_t width = joint_width();
  const auto classes = static_cast<std::size_t>(num_classes());
  const double bound = std::sqrt(6.0 / static_cast<double>(width));
  Tensor w({classes, width});
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  head_weight_ = &head_.add("joint.head.weight", std::move(w));
  head_bias_ = &head_.add("joint.head.bias", Tensor::zeros({classes}));
}

std::size_t AudioVisualModel::joint_width() const {
  return audio_->classifier_input_width() + visual_->classifier_input_width();
}

Var AudioVisualModel::forward(Tape& tape, const Tensor& audio_batch, const Tensor& visual_batch) const {
  if (audio_batch.rank() == 0 || visual_batch.rank() == 0 || audio_batch.dim(0) != visual_batch.dim(0)) {
    throw ConfigError("audio-visual model: batches must pair up, got " + shape_str(audio_batch.shape()) + " and " +
                      shape_str(visual_batch.shape()));
  }
  const Var a = audio_->embed(tape, audio_batch).classifier_input;
  const Var v = visual_->embed(tape, visual_batch).classifier_input;
  return ops::linear(ops::concat_axis1(a, v), tape.parameter(*head_weight_),
                     tape.parameter(*head_bias_));
}

std::vector<ParamRegistry*> AudioVisualModel::registries() {
  return {&audio_->params(), &visual_->params(), &head_};
}

}  // namespace agcn

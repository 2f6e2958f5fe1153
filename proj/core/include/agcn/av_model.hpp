#pragma once

#include <memory>
#include <vector>

#include "agcn/model.hpp"

namespace agcn {

/// Late fusion of an audio and a visual AGCN: each branch runs up to its
/// classifier input, the two are concatenated, and one joint affine head
/// classifies the pair. The per-branch heads are never used.
class AudioVisualModel {
 public:
  // Both configs must agree on num_classes. Training takes its recipe and
  // seed from the visual config.
  AudioVisualModel(const AgcnConfig& audio, const AgcnConfig& visual);

  // Logits [N, num_classes]; row i pairs audio[i] with visual[i].
  Var forward(Tape& tape, const Tensor& audio_batch, const Tensor& visual_batch) const;

  const AgcnModel& audio() const { return *audio_; }
  const AgcnModel& visual() const { return *visual_; }
  ParamRegistry& head_params() { return head_; }
  int num_classes() const { return visual_->config().num_classes; }
  std::size_t joint_width() const;

  // Audio, visual, then the joint head. Branch heads get zero gradients, so
  // SGD leaves them as initialized.
  std::vector<ParamRegistry*> registries();

 private:
  std::unique_ptr<AgcnModel> audio_;
  std::unique_ptr<AgcnModel> visual_;
  ParamRegistry head_;
  Parameter* head_weight_ = nullptr;
  Parameter* head_bias_ = nullptr;
};

}  // namespace agcn

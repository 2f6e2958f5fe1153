#pragma once

#include <map>
#include <string>
#include <vector>

#include "agcn/av_model.hpp"
#include "agcn/config.hpp"
#include "agcn/dataset.hpp"
#include "agcn/model.hpp"

namespace agcn {

// lr0 / factor^floor(epoch / every)
double lr_schedule(const TrainConfig& config, int epoch);

/// Classic momentum SGD: v <- momentum * v + g; w <- w - lr * v, with
/// velocities starting at zero and keyed by parameter name.
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum) : momentum_(momentum) {}

  // Uses each parameter's accumulated grad. Throws NumericError without
  // touching any weight if a gradient is non-finite.
  void step(ParamRegistry& registry, double lr);

  const Tensor* velocity(const std::string& name) const;

 private:
  double momentum_;
  std::map<std::string, Tensor> velocity_;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;  // mean over training samples
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  EvalResult final_eval;  // on the test set, after rounding weights to f32
};

// Stacks samples [C,H,W] into [N,C,H,W].
Tensor stack_batch(const Dataset& data, std::span<const std::size_t> indices);

EvalResult evaluate(const AgcnModel& model, const Dataset& data, std::size_t batch_size = 16);

/// Runs config.train.epochs epochs of shuffled mini-batch SGD, evaluating on
/// `test` after each. Shuffling is seeded from config.seed. Afterwards the
/// weights are rounded to f32 (the checkpoint precision) and the final
/// evaluation is taken from that model, so a saved checkpoint reproduces it.
TrainReport train(AgcnModel& model, const Dataset& train_set, const Dataset& test_set);

// The same recipe for the late-fusion model. Pairs must agree on labels.
EvalResult evaluate(const AudioVisualModel& model, const PairedDataset& data, std::size_t batch_size = 16);
TrainReport train(AudioVisualModel& model, const PairedDataset& train_set, const PairedDataset& test_set);

// k-fold cross-validation with a fresh model per fold; returns fold
// accuracies. Folds are contiguous after a seeded shuffle.
std::vector<double> cross_validate(const AgcnConfig& config, const Dataset& data, int folds);

// "epoch,lr,loss,train_acc,test_acc" with round-trippable doubles.
std::string metrics_csv(const TrainReport& report);
std::string confusion_csv(const EvalResult& eval);

}  // namespace agcn

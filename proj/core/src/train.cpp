#include "agcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "agcn/error.hpp"
#include "agcn/ops.hpp"
#include "agcn/rng.hpp"
#include "agcn/tensor_io.hpp"

namespace agcn {

double lr_schedule(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
  return config.lr0 / std::pow(config.lr_decay_factor, epoch / config.lr_decay_every);
}

void SgdMomentum::step(ParamRegistry& registry, double lr) {
  if (!(lr > 0.0)) throw ConfigError("sgd: learning rate must be positive");
  for (const Parameter& p : registry) {
    if (!p.grad.all_finite()) throw NumericError("sgd: non-finite gradient in " + p.name);
  }
  for (Parameter& p : registry) {
    auto [it, fresh] = velocity_.try_emplace(p.name, Tensor::zeros(p.value.shape()));
    auto v = it->second.data();
    auto w = p.value.data();
    const auto g = p.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      w[i] -= lr * v[i];
    }
  }
}

const Tensor* SgdMomentum::velocity(const std::string& name) const {
  auto it = velocity_.find(name);
  return it == velocity_.end() ? nullptr : &it->second;
}

Tensor stack_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("stack_batch: empty batch");
  const Shape& s = data.samples[indices[0]].input.shape();
  const std::size_t len = shape_numel(s);
  Shape shape{indices.size()};
  shape.insert(shape.end(), s.begin(), s.end());
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& in = data.samples[indices[i]].input;
    if (in.shape() != s) {
      throw DataError("stack_batch: sample shapes differ " + shape_str(s) + " vs " + shape_str(in.shape()));
    }
    std::copy(in.data().begin(), in.data().end(), out.data().begin() + static_cast<long>(i * len));
  }
  return out;
}

namespace {

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t l = logits.dim(1);
  const double* p = logits.data().data() + row * l;
  return static_cast<std::size_t>(std::max_element(p, p + l) - p);
}

void check_labels(const Dataset& data, int num_classes) {
  for (const auto& s : data.samples) {
    if (s.label < 0 || s.label >= num_classes) {
      throw DataError("label " + std::to_string(s.label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace

namespace {

// Logits for the samples at the given indices.
using BatchLogits = std::function<Var(Tape&, std::span<const std::size_t>)>;

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> out;
  for (const auto& s : data.samples) out.push_back(s.label);
  return out;
}

EvalResult evaluate_with(const BatchLogits& logits_of, const std::vector<int>& labels, int num_classes,
                         std::size_t batch_size) {
  const auto classes = static_cast<std::size_t>(num_classes);
  EvalResult r;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t end = std::min(idx.size(), start + batch_size);
    const std::span<const std::size_t> batch(idx.data() + start, end - start);
    Tape tape;
    const Tensor& logits = logits_of(tape, batch).value();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto truth = static_cast<std::size_t>(labels[batch[i]]);
      const std::size_t pred = argmax_row(logits, i);
      ++r.confusion[truth][pred];
      if (pred == truth) ++r.correct;
    }
  }
  r.total = labels.size();
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

// The shared epoch loop. Each registry gets its own momentum buffers.
TrainReport train_with(const TrainConfig& tc, std::uint64_t seed, const BatchLogits& logits_of,
                       const std::vector<int>& labels, const std::vector<ParamRegistry*>& registries,
                       const std::function<EvalResult()>& test_eval) {
  Rng rng(seed ^ 0x5DEECE66DULL);
  std::vector<SgdMomentum> sgd(registries.size(), SgdMomentum(tc.momentum));
  const auto batch_size = static_cast<std::size_t>(tc.batch_size);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = lr_schedule(tc, epoch);
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      std::vector<int> batch_labels;
      for (auto i : batch) batch_labels.push_back(labels[i]);

      Tape tape;
      const Var logits = logits_of(tape, batch);
      const Var loss = ops::softmax_cross_entropy(logits, batch_labels);
      if (!std::isfinite(loss.value()[0])) throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      for (ParamRegistry* r : registries) r->zero_grad();
      tape.backward(loss);
      // Check every gradient before moving any weight.
      for (ParamRegistry* r : registries) {
        for (const Parameter& p : *r) {
          if (!p.grad.all_finite()) throw NumericError("sgd: non-finite gradient in " + p.name);
        }
      }
      for (std::size_t i = 0; i < registries.size(); ++i) sgd[i].step(*registries[i], lr);

      loss_sum += loss.value()[0] * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (argmax_row(logits.value(), i) == static_cast<std::size_t>(batch_labels[i])) ++correct;
      }
    }
    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.loss = loss_sum / static_cast<double>(labels.size());
    st.train_acc = static_cast<double>(correct) / static_cast<double>(labels.size());
    st.test_acc = test_eval().accuracy;
    report.epochs.push_back(st);
  }

  for (ParamRegistry* r : registries) {
    for (Parameter& p : *r) p.value = round_to_f32(p.value);
  }
  report.final_eval = test_eval();
  return report;
}

void check_pairs(const PairedDataset& data, const char* what) {
  if (data.audio.size() != data.visual.size()) {
    throw DataError(std::string(what) + ": " + std::to_string(data.audio.size()) + " audio vs " +
                    std::to_string(data.visual.size()) + " visual samples");
  }
  for (std::size_t i = 0; i < data.audio.size(); ++i) {
    if (data.audio.samples[i].label != data.visual.samples[i].label) {
      throw DataError(std::string(what) + ": labels differ at pair " + std::to_string(i));
    }
  }
}

}  // namespace

EvalResult evaluate(const AgcnModel& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  check_labels(data, model.config().num_classes);
  return evaluate_with([&](Tape& tape, auto batch) { return model.forward(tape, stack_batch(data, batch)).logits; },
                       labels_of(data), model.config().num_classes, batch_size);
}

TrainReport train(AgcnModel& model, const Dataset& train_set, const Dataset& test_set) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (test_set.empty()) throw DataError("train: empty test set");
  const AgcnConfig& cfg = model.config();
  check_labels(train_set, cfg.num_classes);
  check_labels(test_set, cfg.num_classes);
  return train_with(
      cfg.train, cfg.seed,
      [&](Tape& tape, auto batch) { return model.forward(tape, stack_batch(train_set, batch)).logits; },
      labels_of(train_set), {&model.params()}, [&] { return evaluate(model, test_set); });
}

EvalResult evaluate(const AudioVisualModel& model, const PairedDataset& data, std::size_t batch_size) {
  if (data.audio.empty()) throw DataError("evaluate: empty dataset");
  check_pairs(data, "evaluate");
  check_labels(data.audio, model.num_classes());
  return evaluate_with(
      [&](Tape& tape, auto batch) {
        return model.forward(tape, stack_batch(data.audio, batch), stack_batch(data.visual, batch));
      },
      labels_of(data.audio), model.num_classes(), batch_size);
}

TrainReport train(AudioVisualModel& model, const PairedDataset& train_set, const PairedDataset& test_set) {
  if (train_set.audio.empty()) throw DataError("train: empty training set");
  if (test_set.audio.empty()) throw DataError("train: empty test set");
  check_pairs(train_set, "train");
  check_pairs(test_set, "train");
  check_labels(train_set.audio, model.num_classes());
  check_labels(test_set.audio, model.num_classes());
  const AgcnConfig& cfg = model.visual().config();
  return train_with(
      cfg.train, cfg.seed,
      [&](Tape& tape, auto batch) {
        return model.forward(tape, stack_batch(train_set.audio, batch), stack_batch(train_set.visual, batch));
      },
      labels_of(train_set.audio), model.registries(), [&] { return evaluate(model, test_set); });
}

std::vector<double> cross_validate(const AgcnConfig& config, const Dataset& data, int folds) {
  if (folds < 2) throw ConfigError("cross_validate: need at least 2 folds");
  if (data.size() < static_cast<std::size_t>(folds)) throw DataError("cross_validate: fewer samples than folds");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed + 0x2545F4914F6CDD1DULL);
  rng.shuffle(std::span(order));

  std::vector<double> acc;
  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = data.size() * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
    const std::size_t hi = data.size() * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
    Dataset tr, te;
    tr.num_classes = te.num_classes = data.num_classes;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i >= lo && i < hi ? te : tr).samples.push_back(data.samples[order[i]]);
    }
    AgcnModel model(config);
    acc.push_back(train(model, tr, te).final_eval.accuracy);
  }
  return acc;
}

std::string metrics_csv(const TrainReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,lr,loss,train_acc,test_acc\n";
  for (const auto& e : report.epochs) {
    os << e.epoch << ',' << e.lr << ',' << e.loss << ',' << e.train_acc << ',' << e.test_acc << '\n';
  }
  return os.str();
}

std::string confusion_csv(const EvalResult& eval) {
  std::ostringstream os;
  const std::size_t n = eval.confusion.size();
  os << "true\\pred";
  for (std::size_t j = 0; j < n; ++j) os << ',' << j;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << i;
    for (std::size_t j = 0; j < n; ++j) os << ',' << eval.confusion[i][j];
    os << '\n';
  }
  return os.str();
}

}  // namespace agcn

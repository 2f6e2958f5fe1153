#include "agcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "agcn/error.hpp"

namespace agcn {

namespace {

double evaluate(const LossFn& loss_fn) {
  Tape tape;
  const Var loss = loss_fn(tape);
  if (loss.value().numel() != 1) throw ConfigError("finite_diff_check: loss must be scalar");
  const double v = loss.value()[0];
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
  return v;
}

}  // namespace

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport finite_diff_check(ParamRegistry& registry, const LossFn& loss_fn, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("finite_diff_check: epsilon must be positive");

  registry.zero_grad();
  {
    Tape tape;
    const Var loss = loss_fn(tape);
    if (!std::isfinite(loss.value()[0])) throw NumericError("finite_diff_check: non-finite loss");
    tape.backward(loss);
  }

  GradCheckReport report;
  for (Parameter& p : registry) {
    ParamGradCheck entry{p.name, p.value.numel(), 0.0};
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double w = p.value[i];
      p.value[i] = w + epsilon;
      const double up = evaluate(loss_fn);
      p.value[i] = w - epsilon;
      const double down = evaluate(loss_fn);
      p.value[i] = w;
      const double numeric = (up - down) / (2.0 * epsilon);
      entry.max_rel_error = std::max(entry.max_rel_error, relative_error(numeric, p.grad[i]));
    }
    if (entry.max_rel_error > report.max_rel_error || report.worst_param.empty()) {
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.worst_param = entry.name;
    }
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace agcn

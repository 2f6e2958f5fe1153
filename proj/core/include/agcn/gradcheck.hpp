#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "agcn/autograd.hpp"

namespace agcn {

struct ParamGradCheck {
  std::string name;
  std::size_t scalars = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  std::string worst_param;
};

// Builds a scalar loss on the given tape from the registry's parameters.
using LossFn = std::function<Var(Tape&)>;

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Compares reverse-mode gradients against central differences
/// (f(w + eps) - f(w - eps)) / (2 eps) for every scalar in the registry.
/// Parameter values are restored afterwards; grads hold the analytic result.
/// Throws NumericError if any loss evaluation is non-finite.
GradCheckReport finite_diff_check(ParamRegistry& registry, const LossFn& loss_fn, double epsilon);

}  // namespace agcn

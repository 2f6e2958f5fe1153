#include "agcn/params.hpp"

#include "agcn/error.hpp"

namespace agcn {

Parameter& ParamRegistry::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  Tensor grad = Tensor::zeros(init.shape());
  entries_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return entries_.back();
}

Parameter& ParamRegistry::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second];
}

const Parameter& ParamRegistry::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second];
}

Parameter* ParamRegistry::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::size_t ParamRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.numel();
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& p : entries_) p.grad.fill(0.0);
}

}  // namespace agcn

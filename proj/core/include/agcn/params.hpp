#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>

#include "agcn/tensor.hpp"

namespace agcn {

// A trainable tensor: the value plus an accumulated gradient of equal shape.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Named trainable weights in insertion order.
///
/// Entries never move once added, so modules may keep `Parameter*` handles
/// for the registry's lifetime. Names are dotted paths such as
/// "backbone.conv1.weight".
class ParamRegistry {
 public:
  ParamRegistry() = default;
  ParamRegistry(const ParamRegistry&) = delete;
  ParamRegistry& operator=(const ParamRegistry&) = delete;
  ParamRegistry(ParamRegistry&&) = default;
  ParamRegistry& operator=(ParamRegistry&&) = default;

  // Throws ConfigError if the name is taken.
  Parameter& add(std::string name, Tensor init);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::deque<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace agcn

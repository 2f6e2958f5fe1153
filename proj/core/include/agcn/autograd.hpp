#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>

#include "agcn/params.hpp"
#include "agcn/tensor.hpp"

namespace agcn {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records one forward pass and replays it in reverse for gradients.
///
/// Nodes are appended in evaluation order, so reverse iteration is a valid
/// topological order. Gradients for parameter leaves are added into
/// `Parameter::grad` when backward() finishes. A tape is single-use and not
/// thread-safe.
class Tape {
 public:
  // Called with the node's accumulated output gradient; must add into the
  // gradients of its inputs via grad_of().
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  // Seeds d(root)/d(root) = 1; root must hold a single element.
  void backward(Var root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Zero-initialised gradient buffer for an input node, for accumulation.
  Tensor& grad_of(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  std::deque<Node> nodes_;
};

}  // namespace agcn

#include "agcn/autograd.hpp"

#include "agcn/error.hpp"

namespace agcn {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, &p, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.valid() && &v.tape() != this) throw ConfigError("tape: input recorded on another tape");
    needs = needs || (v.valid() && v.requires_grad());
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : Backward{}});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ConfigError("tape: backward root belongs to another tape");
  if (root.value().numel() != 1) {
    throw ConfigError("tape: backward root must be scalar, got " + shape_str(root.shape()));
  }
  if (!requires_grad(root.id())) return;
  grad_of(root.id())[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

}  // namespace agcn

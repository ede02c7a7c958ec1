#pragma once

#include <functional>
#include <vector>

#include "mmvae/tensor.hpp"

namespace mmvae {

using NodeId = int;

// Reverse-mode differentiation record. Nodes are appended in evaluation
// order, so the record is already topologically sorted; backward() walks it
// once in reverse and accumulates gradients additively at fan-out.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId add_bias(NodeId matrix, NodeId bias_row);  // [BxD] + broadcast [1xD]
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double factor);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId sum_all(NodeId a);   // [1x1]
  NodeId mean_all(NodeId a);  // [1x1]

  // z = mean + exp(log_var/2) * eps, all [BxD]; eps is a fixed draw.
  NodeId reparam(NodeId mean, NodeId log_var, NodeId eps);

  // Per-row closed forms, [BxD] inputs reduced to [Bx1].
  NodeId kl_std_rows(NodeId mean, NodeId log_var);
  NodeId kl_pair_rows(NodeId mean_q, NodeId lv_q, NodeId mean_p, NodeId lv_p);
  NodeId gauss_logprob_rows(NodeId x, NodeId mean, NodeId log_var);
  NodeId bern_logprob_rows(NodeId x, NodeId logits);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(objective)/d(objective) = 1 and backpropagates through every
  // node once. The objective must be a [1x1] node.
  void backward(NodeId objective);

  // Gradient of the last backward() objective; zero for unreached nodes.
  const Tensor& grad(NodeId id);

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    std::function<void(Tape&, NodeId)> backprop;
  };

  NodeId push(Tensor value, bool requires_grad, std::function<void(Tape&, NodeId)> backprop);
  void accumulate(NodeId id, const Tensor& g);
  bool has_grad(NodeId id) const { return grads_[id].numel() != 0; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace mmvae

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "radarseg/tensor.hpp"

namespace radarseg::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode graph. `parents` owns the inputs, so the
/// graph is a DAG of shared_ptrs rooted at the final loss. `backprop` pulls
/// this node's gradient into its parents' gradients; leaves have neither.
struct Node {
  Tensor value;
  Tensor grad;  // materialized lazily; always the shape of `value`
  std::uint64_t grad_epoch = 0;  // backward() run that last wrote `grad`
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;

  /// Ensures grad storage exists (zeros) and returns it.
  Tensor& grad_storage();
};

/// Handle to a graph node. Copies share the node; parameters stay alive as
/// long as some Value (or a downstream graph) references them.
class Value {
 public:
  Value() = default;
  explicit Value(Tensor t);  // leaf (parameter or constant)
  static Value scalar(double v);

  const Tensor& value() const { return node_->value; }
  /// In-place access to the stored tensor (optimizer updates, test setup).
  Tensor& value_mut() { return node_->value; }
  /// d(latest backward'd loss) / d(this node): zeros unless the most recent
  /// backward() reached this node.
  const Tensor& grad() const;

  bool defined() const { return node_ != nullptr; }
  const NodePtr& node() const { return node_; }

  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }

 private:
  explicit Value(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;

  friend Value make_op(Tensor, std::vector<Value>, std::function<void(Node&)>);
};

/// Builds a non-leaf node. `backprop` receives the finished node and must
/// accumulate (+=) into each parent's grad_storage(). Exposed so modules can
/// define fused ops with hand-written backward rules.
Value make_op(Tensor value, std::vector<Value> parents,
              std::function<void(Node&)> backprop);

// Elementwise arithmetic. Shapes must match exactly, except add() also
// accepts a 1xD bias row added to every row of an NxD left operand.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value add_const(const Value& x, double c);
Value mul_const(const Value& x, double c);

Value matmul(const Value& a, const Value& b);  // [m x k] * [k x n]
Value transpose(const Value& x);

Value sigmoid(const Value& x);
Value tanh(const Value& x);
/// |x| with subgradient 0 at x = 0.
Value abs(const Value& x);
/// base^x elementwise for a positive constant base; d/dx = base^x * ln(base).
Value pow_const(double base, const Value& exponent);

/// axis 0 stacks rows, axis 1 stacks columns.
Value concat(const Value& a, const Value& b, int axis);
/// 1xD row repeated n times into an NxD matrix; backward sums over rows.
Value tile_rows(const Value& x, std::size_t n);
/// Column-wise max of an NxD matrix -> 1xD. The gradient of each column goes
/// to the single argmax row; ties go to the lowest row index.
Value max_over_rows(const Value& x);

Value softmax_rows(const Value& x);
/// Mean over rows of -log softmax(row)[target]. targets.size() == rows.
Value softmax_cross_entropy(const Value& logits, const std::vector<int>& targets);
Value sum_all(const Value& x);  // -> 1x1

/// Reverse pass from a scalar loss. First zeros the gradients of every node
/// reachable from `loss`, then accumulates, so afterwards each reachable
/// node's grad is exactly d loss / d node. Unreached nodes keep zero grads.
void backward(const Value& loss);

}  // namespace radarseg::ad

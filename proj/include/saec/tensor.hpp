#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace saec {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GradError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Node;

// Propagates self.grad into the grads of self.inputs.
using BackwardFn = std::function<void(Node& self)>;

/// One vertex of the autodiff graph. Data is immutable once the node is
/// built, except for parameter leaves that an optimizer updates in place
/// between backward passes.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first written
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  const char* op = "leaf";

  bool is_leaf() const { return !backward; }
  std::vector<double>& ensure_grad();
};

/// Dense row-major array of doubles with an optional gradient buffer.
/// Copies of a Tensor share the same node (handle semantics).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  // Only for parameter initialization and optimizer updates.
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Empty span when no gradient has been written yet.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  /// Graph-free copy of the values.
  Tensor detach() const;
  Tensor clone(bool requires_grad) const;

  /// True when every value and gradient entry is finite.
  bool is_finite() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  Node& impl() const { return *node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds the result of a primitive. The backward rule and input links are
/// only kept when at least one input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
                   const char* op, BackwardFn backward);
Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   const char* op, BackwardFn backward);

/// While alive, results of primitives on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

/// Nodes reachable from a loss in topological order (operands first).
class ComputationTape {
 public:
  static ComputationTape record(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node*>& nodes() const { return nodes_; }

  /// Seeds d(loss)/d(loss)=1 and runs every backward rule once, in reverse
  /// order. Returns the number of backward rules executed.
  std::size_t run();

 private:
  Tensor loss_;
  std::vector<Node*> nodes_;
};

struct BackwardStats {
  std::size_t nodes = 0;     // nodes on the tape
  std::size_t visited = 0;   // backward rules executed
};

/// Accumulates d(loss)/d(leaf) into every reachable leaf that requires a
/// gradient. Callers zero gradients between steps.
BackwardStats backward(const Tensor& loss);

}  // namespace saec

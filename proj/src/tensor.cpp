#include "saec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace saec {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

namespace {

void check_shape(const Shape& shape, std::size_t count) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
  if (numel(shape) != count) {
    throw ShapeError("shape " + to_string(shape) + " does not hold " + std::to_string(count) +
                     " values");
  }
}

thread_local bool g_no_grad = false;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> values(saec::numel(shape), value);
  return from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape, values.size());
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return clone(false); }

Tensor Tensor::clone(bool requires_grad) const { return from(shape(), node_->data, requires_grad); }

bool Tensor::is_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(node_->data.begin(), node_->data.end(), finite) &&
         std::all_of(node_->grad.begin(), node_->grad.end(), finite);
}

Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   const char* op, BackwardFn backward) {
  check_shape(shape, values.size());
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->op = op;
  bool any = !g_no_grad && std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->backward = std::move(backward);
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
  }
  return Tensor(std::move(node));
}

Tensor make_result(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
                   const char* op, BackwardFn backward) {
  return make_result(std::move(shape), std::move(values), std::vector<Tensor>(inputs), op,
                     std::move(backward));
}

ComputationTape ComputationTape::record(const Tensor& loss) {
  ComputationTape tape;
  tape.loss_ = loss;
  if (!loss.requires_grad()) return tape;

  // Iterative post-order DFS; operands are emitted before their consumers.
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      tape.nodes_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

std::size_t ComputationTape::run() {
  if (nodes_.empty()) return 0;
  for (Node* n : nodes_) {
    if (!n->is_leaf()) n->grad.clear();
  }
  Node& root = loss_.impl();
  root.ensure_grad()[0] += 1.0;

  std::size_t visited = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf()) continue;
    n->ensure_grad();
    n->backward(*n);
    ++visited;
    // Interior gradients are scratch space.
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
  return visited;
}

BackwardStats backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw GradError("backward() requires a scalar loss, got shape " +
                    (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  auto tape = ComputationTape::record(loss);
  BackwardStats stats;
  stats.nodes = tape.size();
  stats.visited = tape.run();
  return stats;
}

}  // namespace saec

#pragma once

#include "choir/ad/real.hpp"
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace choir::inline CHOIR_PRECISION_NS::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// One value in the computation graph. Leaves (parameters, constants) live
// outside any graph; intermediate nodes are owned by the Graph that
// recorded them.
struct Node {
  std::uint64_t id = 0;
  const char* op = "leaf";
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<real>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

// Handle to a node. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<real> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, real value);
  static Tensor scalar(real value);
  // Leaf that accumulates gradients across backward passes.
  static Tensor parameter(Shape shape, std::vector<real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  // Matrix view: rows = product of leading dims, cols = last dim.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const real> values() const { return node_->value; }
  std::span<real> mutable_values() { return node_->value; }
  std::span<const real> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  void zero_grad() { node_->grad.clear(); }

  real item() const;
  real at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  std::uint64_t id() const { return node_->id; }
  const char* op() const { return node_->op; }

  // Constant copy of the current values, cut from any graph.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Append-only record of the operations executed while it is active on the
// current thread. Parents always precede children, so reverse append order
// is a valid topological order for backward.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Populates grad() of every node reachable from `loss`, including leaves.
  // Leaf gradients accumulate across calls until zeroed.
  void backward(const Tensor& loss);

  void record(std::shared_ptr<Node> node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
};

// Makes `graph` the recording target for ops on this thread while alive.
class GraphScope {
 public:
  explicit GraphScope(Graph& graph);
  ~GraphScope();
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

 private:
  Graph* previous_;
};

// Suspends recording on this thread while alive.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Graph* previous_;
};

Graph* active_graph();

std::uint64_t next_node_id();

}  // namespace choir::inline CHOIR_PRECISION_NS::ad

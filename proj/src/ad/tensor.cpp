#include "choir/ad/tensor.hpp"

#include <cmath>
#include <sstream>

#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

namespace {
thread_local Graph* g_active = nullptr;
thread_local std::uint64_t g_next_id = 1;
}  // namespace

std::uint64_t next_node_id() { return g_next_id++; }

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
std::shared_ptr<Node> make_leaf(Shape shape, std::vector<real> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->id = next_node_id();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}
}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<real> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, real value) {
  auto n = numel(shape);
  return constant(std::move(shape), std::vector<real>(n, value));
}

Tensor Tensor::scalar(real value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<real> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), true));
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.empty()) return 1;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) r *= s[i];
  return r;
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  return s.empty() ? 1 : s.back();
}

real Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

void Graph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: loss does not depend on any tensor that requires grad");
  }
  for (auto& n : nodes_) n->grad.clear();
  loss.node()->grad_buffer()[0] += 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward_fn) continue;
    for (real g : n.grad) {
      if (!std::isfinite(g)) {
        throw NumericError("backward: non-finite gradient at node #" + std::to_string(n.id) + " (" + n.op +
                           ", shape " + shape_str(n.shape) + ")");
      }
    }
    n.backward_fn(n);
  }
}

GraphScope::GraphScope(Graph& graph) : previous_(g_active) { g_active = &graph; }
GraphScope::~GraphScope() { g_active = previous_; }

NoGradScope::NoGradScope() : previous_(g_active) { g_active = nullptr; }
NoGradScope::~NoGradScope() { g_active = previous_; }

Graph* active_graph() { return g_active; }

}  // namespace choir::inline CHOIR_PRECISION_NS::ad

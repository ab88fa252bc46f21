#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sinusseg::nets {

/// NCHW extent.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const noexcept { return std::size_t(n) * std::size_t(c) * std::size_t(h) * std::size_t(w); }
  std::size_t plane() const noexcept { return std::size_t(h) * std::size_t(w); }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node& self)> backward;  // reads self.grad, accumulates into parents

  std::vector<float>& ensure_grad();
};

}  // namespace detail

/// Shared handle to a value in the autograd graph. Copies alias.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->shape.numel(); }
  std::span<float> data() { return node_->value; }
  std::span<const float> data() const { return node_->value; }
  /// Gradient buffer, allocated (zeroed) on first access.
  std::span<float> grad() { return node_->ensure_grad(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();
  float item() const;

  /// Same values, cut from the graph.
  Tensor detach() const;

  /// Values of sample `i` as a span.
  std::span<const float> sample(int i) const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_result(Shape, std::vector<float>, const std::vector<Tensor>&,
                            std::function<void(detail::Node&)>);
};

/// Whether ops currently record the graph (thread-local).
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op output. The graph edge is recorded only when grad mode is on
/// and some parent requires grad.
Tensor make_result(Shape shape, std::vector<float> value, const std::vector<Tensor>& parents,
                   std::function<void(detail::Node&)> backward);

/// Reverse-mode pass seeded with d(objective)/d(output) for each output.
void backward(const std::vector<std::pair<Tensor, std::vector<float>>>& seeds);

/// Seeds a single-element tensor with 1.
void backward(const Tensor& scalar);

}  // namespace sinusseg::nets

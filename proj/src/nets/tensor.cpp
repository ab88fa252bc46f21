#include "sinusseg/nets/tensor.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_set>

#include "sinusseg/core/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace sinusseg::nets {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "]";
}

namespace detail {
std::vector<float>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0f);
  return grad;
}
}  // namespace detail

namespace {
// Activations are large and short-lived. Serving them from the heap instead
// of fresh mmap regions avoids re-faulting every page on each training step.
void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}
}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from(shape, std::vector<float>(shape.numel(), 0.0f), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  if (values.size() != shape.numel())
    raise(ErrorKind::Shape, "tensor " + shape.str() + " given " + std::to_string(values.size()) + " values");
  tune_allocator();
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1) raise(ErrorKind::Shape, "item() on tensor " + shape().str());
  return node_->value[0];
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

std::span<const float> Tensor::sample(int i) const {
  const std::size_t per = numel() / std::size_t(shape().n);
  return data().subspan(std::size_t(i) * per, per);
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<float> value, const std::vector<Tensor>& parents,
                   std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(value);
  if (g_grad_enabled && std::any_of(parents.begin(), parents.end(), [](const Tensor& t) {
        return t.defined() && t.requires_grad();
      })) {
    node->requires_grad = true;
    for (const auto& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const std::vector<std::pair<Tensor, std::vector<float>>>& seeds) {
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  for (const auto& [t, g] : seeds) {
    if (g.size() != t.numel()) raise(ErrorKind::Shape, "backward seed size mismatch for " + t.shape().str());
    if (!t.requires_grad()) continue;
    auto& dst = t.node()->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    if (seen.insert(t.node()).second) stack.push_back({t.node(), 0});
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        detail::Node* p = node->parents[next++].get();
        if (p && p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void backward(const Tensor& scalar) {
  if (scalar.numel() != 1) raise(ErrorKind::Shape, "backward(scalar) on tensor " + scalar.shape().str());
  backward({{scalar, std::vector<float>{1.0f}}});
}

}  // namespace sinusseg::nets

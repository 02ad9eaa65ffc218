#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace c2d {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward_fn;

  std::vector<float>& ensure_grad();
};

}  // namespace detail

// Dense row-major float32 tensor with reverse-mode autodiff.
//
// A Tensor is a shared handle: copies alias the same storage. Operations in
// ops.hpp produce new tensors and, when any input requires grad and grad mode
// is enabled, record a backward closure.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const float> data() const;
  // Direct write access; only meant for leaves (parameter init, optimizer).
  std::span<float> mutable_data();

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  float item() const;
  float at(std::initializer_list<std::size_t> index) const;

  // Graph-free deep copy.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  // Differentiable reshape (copies data).
  Tensor reshape(Shape shape) const;

  // Reverse-mode sweep from a scalar. Throws ShapeError for non-scalars and
  // NonFiniteError if the loss or any accumulated grad is NaN/Inf.
  void backward() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Grad recording is on by default; NoGradGuard disables it for its scope
// (evaluation, validation).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool all_finite(std::span<const float> values);

namespace detail {

// Builds the result node. The backward closure is kept only when recording
// is enabled and at least one input requires grad.
Tensor make_result(Shape shape, std::vector<float> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

}  // namespace detail

}  // namespace c2d

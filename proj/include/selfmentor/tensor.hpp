#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace selfmentor {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Eigen picks its vectorised peeling from the buffer address, so a fixed
// alignment keeps float results identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

namespace detail {

struct Node {
  Shape shape;
  FloatBuffer value;
  // Empty until gradient flows into the node (or the node is a tracked leaf).
  FloatBuffer grad;
  bool track_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents that track grads.
  std::function<void(Node&)> backward;

  FloatBuffer& ensure_grad();
};

}  // namespace detail

// N-dimensional float array with an optional gradient buffer. Copies share
// storage; use detach() or clone() for an independent copy. Operations on
// tensors that track gradients record a graph that backward() walks.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, const std::vector<float>& values);
  Tensor(Shape shape, FloatBuffer values);

  static Tensor scalar(float value);

  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<float> values() { return node_->value; }
  std::span<const float> values() const { return node_->value; }
  float item() const;

  bool track_grad() const { return node_->track_grad; }
  // Leaves only: enabling allocates a zero gradient buffer, disabling drops it.
  void set_track_grad(bool enabled);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const float> grad() const { return node_->grad; }
  std::span<float> mutable_grad() { return node_->grad; }
  void zero_grad();

  // Copy of the values, detached from any graph.
  Tensor detach() const;

  bool is_leaf() const { return !node_->backward; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Whether new operations record a graph on this thread.
bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. The graph edge is recorded only when grad mode is on
// and at least one parent tracks gradients.
Tensor make_result(Shape shape, FloatBuffer values,
                   std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward_fn);

// Reverse-mode sweep from a scalar. Gradients accumulate into tracked leaves;
// intermediate gradient buffers are released once propagated.
void backward(const Tensor& loss_value);

}  // namespace selfmentor

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltae/errors.hpp"

namespace ltae {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

namespace detail {

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;    // persistent accumulator, allocated on demand
  bool requires_grad = false;  // leaf flag: backward() deposits gradients here
  bool on_graph = false;       // produced by an operation recorded on a tape
};

}  // namespace detail

// Dense fp64 tensor. A Tensor is a cheap handle onto shared storage, so
// copies alias the same buffer; fresh storage is only created by operations.
// While a Tape is active, operations involving differentiable tensors are
// recorded so that Tape::backward can later propagate gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double fill);
  static Tensor from_values(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);  // shape {1}

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const;
  std::size_t extent(std::size_t axis) const;

  double value() const;            // single-element tensors only
  double at(std::size_t i) const;  // flat, row-major
  double at(std::size_t row, std::size_t col) const;

  std::span<const double> values() const;
  // In-place access for parameter updates and test perturbations. Mutating a
  // tensor that already participates in recorded operations invalidates any
  // pending backward pass.
  std::span<double> values_mut();

  bool requires_grad() const;
  Tensor& set_requires_grad(bool enable);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  void zero_grad();

  const std::shared_ptr<detail::TensorData>& node() const { return data_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorData> data) : data_(std::move(data)) {}

  std::shared_ptr<detail::TensorData> data_;
};

// Per-backward-pass gradient buffers, keyed by tensor storage. Buffers are
// zero-initialized on first access and folded into persistent grads at the
// end of the pass.
class BackwardContext {
 public:
  std::vector<double>& buffer(const std::shared_ptr<detail::TensorData>& node);
  bool has(const detail::TensorData* node) const;
  std::span<const double> view(const detail::TensorData* node) const;
  // True when a gradient for `node` is needed: it is a leaf parameter or an
  // intermediate that further operations depend on.
  static bool wants(const detail::TensorData* node);

 private:
  friend class Tape;
  struct Entry {
    std::shared_ptr<detail::TensorData> node;
    std::vector<double> adjoint;
  };
  std::unordered_map<const detail::TensorData*, Entry> entries_;
};

// Records primitive operations in execution order (which is topological by
// construction). Construction makes the tape active for the current thread;
// destruction restores the previous one.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  using PullFn = std::function<void(std::span<const double> out_grad, BackwardContext& ctx)>;
  void record(const Tensor& out, PullFn pull);

  // Reverse pass from a scalar loss. Every recorded operation is visited at
  // most once, newest first; requires_grad leaves accumulate into .grad, so
  // repeated calls without zero_grad() sum their contributions.
  void backward(const Tensor& loss);

  std::size_t recorded_ops() const { return records_.size(); }

 private:
  struct Record {
    std::shared_ptr<detail::TensorData> out;
    PullFn pull;
  };
  std::vector<Record> records_;
  Tape* previous_ = nullptr;
};

// Convenience: backward on the thread's active tape.
void backward(const Tensor& loss);

}  // namespace ltae

#include "ltae/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace ltae {

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_volume(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

Tensor Tensor::zeros(Shape shape) {
  return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double fill) {
  auto data = std::make_shared<detail::TensorData>();
  data->values.assign(shape_volume(shape), fill);
  data->shape = std::move(shape);
  return Tensor(std::move(data));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values) {
  if (shape_volume(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  auto data = std::make_shared<detail::TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  return Tensor(std::move(data));
}

Tensor Tensor::scalar(double value) {
  return from_values({1}, {value});
}

const Shape& Tensor::shape() const {
  return data_->shape;
}

std::size_t Tensor::size() const {
  return data_ ? data_->values.size() : 0;
}

std::size_t Tensor::rank() const {
  return data_->shape.size();
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= data_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(data_->shape));
  }
  return data_->shape[axis];
}

double Tensor::value() const {
  if (size() != 1) {
    throw ContractError("value() requires a single-element tensor, got shape " +
                        shape_to_string(data_->shape));
  }
  return data_->values[0];
}

double Tensor::at(std::size_t i) const {
  return data_->values.at(i);
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) {
    throw DimensionError("2-d indexing on tensor of shape " + shape_to_string(data_->shape));
  }
  return data_->values.at(row * data_->shape[1] + col);
}

std::span<const double> Tensor::values() const {
  return data_->values;
}

std::span<double> Tensor::values_mut() {
  return data_->values;
}

bool Tensor::requires_grad() const {
  return data_ && data_->requires_grad;
}

Tensor& Tensor::set_requires_grad(bool enable) {
  data_->requires_grad = enable;
  return *this;
}

bool Tensor::has_grad() const {
  return data_ && !data_->grad.empty();
}

std::span<const double> Tensor::grad() const {
  return data_->grad;
}

std::span<double> Tensor::grad_mut() {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  return data_->grad;
}

void Tensor::zero_grad() {
  if (data_) data_->grad.assign(data_->values.size(), 0.0);
}

std::vector<double>& BackwardContext::buffer(const std::shared_ptr<detail::TensorData>& node) {
  auto [it, inserted] = entries_.try_emplace(node.get());
  if (inserted) {
    it->second.node = node;
    it->second.adjoint.assign(node->values.size(), 0.0);
  }
  return it->second.adjoint;
}

bool BackwardContext::has(const detail::TensorData* node) const {
  return entries_.find(node) != entries_.end();
}

std::span<const double> BackwardContext::view(const detail::TensorData* node) const {
  return entries_.at(node).adjoint;
}

bool BackwardContext::wants(const detail::TensorData* node) {
  return node->requires_grad || node->on_graph;
}

Tape::Tape() {
  previous_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() {
  g_active_tape = previous_;
}

Tape* Tape::active() noexcept {
  return g_active_tape;
}

void Tape::record(const Tensor& out, PullFn pull) {
  out.node()->on_graph = true;
  records_.push_back({out.node(), std::move(pull)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss" +
                        (loss.defined() ? ", got shape " + shape_to_string(loss.shape())
                                        : std::string(", got an undefined tensor")));
  }
  BackwardContext ctx;
  ctx.buffer(loss.node())[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    const detail::TensorData* out = it->out.get();
    if (!ctx.has(out)) continue;  // no gradient flowed into this operation
    it->pull(ctx.view(out), ctx);
  }
  for (auto& [ptr, entry] : ctx.entries_) {
    if (!entry.node->requires_grad) continue;
    auto& grad = entry.node->grad;
    if (grad.empty()) grad.assign(entry.node->values.size(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += entry.adjoint[i];
  }
}

void backward(const Tensor& loss) {
  Tape* tape = Tape::active();
  if (tape == nullptr) {
    throw ContractError("backward called with no active tape");
  }
  tape->backward(loss);
}

}  // namespace ltae

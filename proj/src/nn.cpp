#include "ltae/nn.hpp"

#include <cmath>

namespace ltae {

Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> values(fan_out * fan_in);
  for (double& v : values) v = dist(rng);
  return Tensor::from_values({fan_out, fan_in}, std::move(values));
}

Tensor scaled_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> values(shape_volume(shape));
  for (double& v : values) v = dist(rng) * stddev;
  return Tensor::from_values(std::move(shape), std::move(values));
}

Linear::Linear(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim == 0 || out_dim == 0) {
    throw ConfigError("linear layer dimensions must be positive");
  }
  weight_ = glorot_uniform(out_dim, in_dim, rng);
  weight_.set_requires_grad(true);
  bias_ = Tensor::zeros({out_dim});
  bias_.set_requires_grad(true);
}

Tensor Linear::apply(const Tensor& x) const {
  if (x.rank() == 1) {
    return add(matvec(weight_, x), bias_);
  }
  if (x.rank() == 2) {
    return add_bias(matmul(weight_, x), bias_);
  }
  throw DimensionError("linear layer expects rank-1 or rank-2 input, got shape " +
                       shape_to_string(x.shape()));
}

void Linear::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Mlp::Mlp(std::span<const std::size_t> widths, std::mt19937_64& rng)
    : widths_(widths.begin(), widths.end()) {
  if (widths_.empty()) throw ConfigError("mlp needs at least one width");
  layers_.reserve(widths_.size() - 1);
  for (std::size_t i = 1; i < widths_.size(); ++i) {
    layers_.emplace_back(widths_[i - 1], widths_[i], rng);
  }
}

Tensor Mlp::apply(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].apply(h);
    if (i + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect_parameters(prefix + ".layer" + std::to_string(i), out);
  }
}

}  // namespace ltae

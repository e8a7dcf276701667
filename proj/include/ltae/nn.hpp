#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "ltae/ops.hpp"
#include "ltae/tensor.hpp"

namespace ltae {

struct NamedParam {
  std::string name;
  Tensor tensor;  // shares storage with the owning module
};

// Glorot-uniform weight initialization: entries drawn from
// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
Tensor glorot_uniform(std::size_t fan_out, std::size_t fan_in, std::mt19937_64& rng);

// Standard normal entries multiplied by `stddev`.
Tensor scaled_normal(Shape shape, double stddev, std::mt19937_64& rng);

// Affine layer y = W x + b with W of shape [out x in]. Accepts a rank-1
// input [in] or a rank-2 input [in x n] applied column by column.
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng);

  Tensor apply(const Tensor& x) const;
  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  std::size_t param_count() const { return in_dim_ * out_dim_ + out_dim_; }

  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  Tensor weight_;
  Tensor bias_;
};

// Affine chain along `widths` with relu between layers and a plain affine
// last layer. A single-entry width list yields the identity map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::span<const std::size_t> widths, std::mt19937_64& rng);

  Tensor apply(const Tensor& x) const;
  std::size_t in_dim() const { return widths_.front(); }
  std::size_t out_dim() const { return widths_.back(); }
  const std::vector<Linear>& layers() const { return layers_; }
  std::vector<Linear>& layers() { return layers_; }

  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

 private:
  std::vector<std::size_t> widths_;
  std::vector<Linear> layers_;
};

}  // namespace ltae

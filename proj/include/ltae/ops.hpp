#pragma once

#include <span>

#include "ltae/tensor.hpp"

namespace ltae {

// Primitive differentiable operations. All of them validate shapes, compute
// with fixed (deterministic) reduction order, and register a reverse rule on
// the active tape when an input is differentiable.

Tensor matmul(const Tensor& a, const Tensor& b);  // [m x n] * [n x p] -> [m x p]
Tensor matvec(const Tensor& m, const Tensor& v);  // [r x c] * [c] -> [r]
Tensor transpose(const Tensor& m);                // [r x c] -> [c x r]

Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);     // elementwise
Tensor scale(const Tensor& a, double factor);     // constant factor
Tensor add_bias(const Tensor& m, const Tensor& v);  // v[r] added to every column of m[r x c]

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& t, Shape shape);

Tensor sum(const Tensor& t);   // -> scalar {1}
Tensor mean(const Tensor& t);  // -> scalar {1}
Tensor sum_axis(const Tensor& m, std::size_t axis);   // rank-2 -> rank-1
Tensor mean_axis(const Tensor& m, std::size_t axis);  // rank-2 -> rank-1

Tensor relu(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor log(const Tensor& t);
// Elementwise square root; the pulled gradient at 0 is defined as 0 (one-sided
// subgradient), mirroring relu.
Tensor sqrt(const Tensor& t);

Tensor dot(const Tensor& a, const Tensor& b);  // rank-1, -> scalar {1}

// Numerically stabilized softmax of scale*x over a rank-1 tensor. Entries are
// positive and sum to 1 within 1e-12.
Tensor softmax(const Tensor& x, double logit_scale = 1.0);

// log(sum(exp(x))) over a rank-1 tensor, max-stabilized. -> scalar {1}
Tensor logsumexp(const Tensor& x);

}  // namespace ltae

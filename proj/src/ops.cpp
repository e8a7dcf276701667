#include "ltae/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ltae {

namespace {

using detail::TensorData;
using NodePtr = std::shared_ptr<TensorData>;

bool tracked(const Tensor& t) {
  return t.node()->requires_grad || t.node()->on_graph;
}

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (tracked(*t)) return tape;
  }
  return nullptr;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank-" + std::to_string(rank) +
                         " tensor, got shape " + shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.extent(0), n = a.extent(1), p = b.extent(1);
  if (b.extent(0) != n) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
  const double* av = a.values().data();
  const double* bv = b.values().data();
  std::vector<double> out(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = av[i * n + k];
      const double* brow = bv + k * p;
      double* orow = out.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += aik * brow[j];
    }
  }
  Tensor result = Tensor::from_values({m, p}, std::move(out));
  if (Tape* tape = recording_tape({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    tape->record(result, [an, bn, m, n, p](std::span<const double> g, BackwardContext& ctx) {
      if (BackwardContext::wants(an.get())) {
        auto& ga = ctx.buffer(an);  // ga += g * b^T
        const double* bv = bn->values.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            const double* grow = g.data() + i * p;
            const double* brow = bv + k * p;
            for (std::size_t j = 0; j < p; ++j) acc += grow[j] * brow[j];
            ga[i * n + k] += acc;
          }
        }
      }
      if (BackwardContext::wants(bn.get())) {
        auto& gb = ctx.buffer(bn);  // gb += a^T * g
        const double* av = an->values.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g.data() + i * p;
          for (std::size_t k = 0; k < n; ++k) {
            const double aik = av[i * n + k];
            double* gbrow = gb.data() + k * p;
            for (std::size_t j = 0; j < p; ++j) gbrow[j] += aik * grow[j];
          }
        }
      }
    });
  }
  return result;
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  require_rank(m, 2, "matvec");
  require_rank(v, 1, "matvec");
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  if (v.extent(0) != cols) {
    throw DimensionError("matvec: " + shape_to_string(m.shape()) + " against vector " +
                         shape_to_string(v.shape()));
  }
  const double* mv = m.values().data();
  const double* vv = v.values().data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = mv + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * vv[j];
    out[i] = acc;
  }
  Tensor result = Tensor::from_values({rows}, std::move(out));
  if (Tape* tape = recording_tape({&m, &v})) {
    NodePtr mn = m.node(), vn = v.node();
    tape->record(result, [mn, vn, rows, cols](std::span<const double> g, BackwardContext& ctx) {
      if (BackwardContext::wants(mn.get())) {
        auto& gm = ctx.buffer(mn);  // gm += outer(g, v)
        const double* vv = vn->values.data();
        for (std::size_t i = 0; i < rows; ++i) {
          double* row = gm.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) row[j] += g[i] * vv[j];
        }
      }
      if (BackwardContext::wants(vn.get())) {
        auto& gv = ctx.buffer(vn);  // gv += m^T * g
        const double* mv = mn->values.data();
        for (std::size_t i = 0; i < rows; ++i) {
          const double* row = mv + i * cols;
          for (std::size_t j = 0; j < cols; ++j) gv[j] += row[j] * g[i];
        }
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& m) {
  require_rank(m, 2, "transpose");
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  const double* mv = m.values().data();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = mv[i * cols + j];
  }
  Tensor result = Tensor::from_values({cols, rows}, std::move(out));
  if (Tape* tape = recording_tape({&m})) {
    NodePtr mn = m.node();
    tape->record(result, [mn, rows, cols](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(mn.get())) return;
      auto& gm = ctx.buffer(mn);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) gm[i * cols + j] += g[j * rows + i];
      }
    });
  }
  return result;
}

namespace {

Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double),
                          void (*pull)(std::span<const double>, const TensorData&,
                                       const TensorData&, std::vector<double>*,
                                       std::vector<double>*)) {
  require_same_shape(a, b, name);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  Tensor result = Tensor::from_values(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    tape->record(result, [an, bn, pull](std::span<const double> g, BackwardContext& ctx) {
      std::vector<double>* ga =
          BackwardContext::wants(an.get()) ? &ctx.buffer(an) : nullptr;
      std::vector<double>* gb =
          BackwardContext::wants(bn.get()) ? &ctx.buffer(bn) : nullptr;
      pull(g, *an, *bn, ga, gb);
    });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](std::span<const double> g, const TensorData&, const TensorData&,
         std::vector<double>* ga, std::vector<double>* gb) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (ga) (*ga)[i] += g[i];
          if (gb) (*gb)[i] += g[i];
        }
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](std::span<const double> g, const TensorData&, const TensorData&,
         std::vector<double>* ga, std::vector<double>* gb) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (ga) (*ga)[i] += g[i];
          if (gb) (*gb)[i] -= g[i];
        }
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](std::span<const double> g, const TensorData& an, const TensorData& bn,
         std::vector<double>* ga, std::vector<double>* gb) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (ga) (*ga)[i] += g[i] * bn.values[i];
          if (gb) (*gb)[i] += g[i] * an.values[i];
        }
      });
}

Tensor scale(const Tensor& a, double factor) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  Tensor result = Tensor::from_values(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a})) {
    NodePtr an = a.node();
    tape->record(result, [an, factor](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(an.get())) return;
      auto& ga = ctx.buffer(an);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return result;
}

Tensor add_bias(const Tensor& m, const Tensor& v) {
  require_rank(m, 2, "add_bias");
  require_rank(v, 1, "add_bias");
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  if (v.extent(0) != rows) {
    throw DimensionError("add_bias: bias " + shape_to_string(v.shape()) +
                         " does not match rows of " + shape_to_string(m.shape()));
  }
  const double* mv = m.values().data();
  const double* vv = v.values().data();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = mv[i * cols + j] + vv[i];
  }
  Tensor result = Tensor::from_values({rows, cols}, std::move(out));
  if (Tape* tape = recording_tape({&m, &v})) {
    NodePtr mn = m.node(), vn = v.node();
    tape->record(result, [mn, vn, rows, cols](std::span<const double> g, BackwardContext& ctx) {
      if (BackwardContext::wants(mn.get())) {
        auto& gm = ctx.buffer(mn);
        for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
      }
      if (BackwardContext::wants(vn.get())) {
        auto& gv = ctx.buffer(vn);
        for (std::size_t i = 0; i < rows; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < cols; ++j) acc += g[i * cols + j];
          gv[i] += acc;
        }
      }
    });
  }
  return result;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const std::size_t rank = parts.front().rank();
  if (axis >= rank) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
  }
  std::size_t joined = 0;
  for (const Tensor& part : parts) {
    if (part.rank() != rank) throw DimensionError("concat: mixed ranks");
    for (std::size_t d = 0; d < rank; ++d) {
      if (d != axis && part.extent(d) != parts.front().extent(d)) {
        throw DimensionError("concat: shape mismatch " + shape_to_string(part.shape()) + " vs " +
                             shape_to_string(parts.front().shape()));
      }
    }
    joined += part.extent(axis);
  }
  Shape out_shape = parts.front().shape();
  out_shape[axis] = joined;

  // Row-major copy. `outer` iterates the dimensions before `axis`, `inner` is
  // the contiguous run after it.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < rank; ++d) inner *= out_shape[d];

  std::vector<double> out(shape_volume(out_shape));
  std::size_t offset = 0;  // position along `axis` in the output
  for (const Tensor& part : parts) {
    const std::size_t extent = part.extent(axis);
    const double* src = part.values().data();
    for (std::size_t o = 0; o < outer; ++o) {
      double* dst = out.data() + (o * joined + offset) * inner;
      std::memcpy(dst, src + o * extent * inner, extent * inner * sizeof(double));
    }
    offset += extent;
  }
  Tensor result = Tensor::from_values(std::move(out_shape), std::move(out));

  Tape* tape = Tape::active();
  bool any_tracked = false;
  for (const Tensor& part : parts) any_tracked = any_tracked || tracked(part);
  if (tape != nullptr && any_tracked) {
    std::vector<NodePtr> nodes;
    std::vector<std::size_t> extents;
    nodes.reserve(parts.size());
    for (const Tensor& part : parts) {
      nodes.push_back(part.node());
      extents.push_back(part.extent(axis));
    }
    tape->record(result, [nodes, extents, outer, inner, joined](std::span<const double> g,
                                                                BackwardContext& ctx) {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        const std::size_t extent = extents[p];
        if (BackwardContext::wants(nodes[p].get())) {
          auto& gp = ctx.buffer(nodes[p]);
          for (std::size_t o = 0; o < outer; ++o) {
            const double* src = g.data() + (o * joined + offset) * inner;
            double* dst = gp.data() + o * extent * inner;
            for (std::size_t i = 0; i < extent * inner; ++i) dst[i] += src[i];
          }
        }
        offset += extent;
      }
    });
  }
  return result;
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t length) {
  const std::size_t rank = t.rank();
  if (axis >= rank) {
    throw DimensionError("slice: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(t.shape()));
  }
  const std::size_t extent = t.extent(axis);
  if (start + length > extent || length == 0) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") invalid for extent " +
                         std::to_string(extent));
  }
  Shape out_shape = t.shape();
  out_shape[axis] = length;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= t.shape()[d];
  for (std::size_t d = axis + 1; d < rank; ++d) inner *= t.shape()[d];

  std::vector<double> out(shape_volume(out_shape));
  const double* src = t.values().data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::memcpy(out.data() + o * length * inner, src + (o * extent + start) * inner,
                length * inner * sizeof(double));
  }
  Tensor result = Tensor::from_values(std::move(out_shape), std::move(out));
  if (Tape* tape = recording_tape({&t})) {
    NodePtr tn = t.node();
    tape->record(result, [tn, outer, inner, extent, start, length](std::span<const double> g,
                                                                   BackwardContext& ctx) {
      if (!BackwardContext::wants(tn.get())) return;
      auto& gt = ctx.buffer(tn);
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = g.data() + o * length * inner;
        double* dst = gt.data() + (o * extent + start) * inner;
        for (std::size_t i = 0; i < length * inner; ++i) dst[i] += src[i];
      }
    });
  }
  return result;
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_volume(shape) != t.size()) {
    throw DimensionError("reshape: " + shape_to_string(t.shape()) + " has " +
                         std::to_string(t.size()) + " elements, target " +
                         shape_to_string(shape) + " needs " +
                         std::to_string(shape_volume(shape)));
  }
  std::vector<double> out(t.values().begin(), t.values().end());
  Tensor result = Tensor::from_values(std::move(shape), std::move(out));
  if (Tape* tape = recording_tape({&t})) {
    NodePtr tn = t.node();
    tape->record(result, [tn](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(tn.get())) return;
      auto& gt = ctx.buffer(tn);
      for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
    });
  }
  return result;
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  Tensor result = Tensor::scalar(acc);
  if (Tape* tape = recording_tape({&t})) {
    NodePtr tn = t.node();
    tape->record(result, [tn](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(tn.get())) return;
      auto& gt = ctx.buffer(tn);
      for (double& gi : gt) gi += g[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& t) {
  if (t.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(t), 1.0 / static_cast<double>(t.size()));
}

Tensor sum_axis(const Tensor& m, std::size_t axis) {
  require_rank(m, 2, "sum_axis");
  if (axis > 1) throw DimensionError("sum_axis: axis must be 0 or 1");
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  const double* mv = m.values().data();
  const std::size_t out_len = (axis == 0) ? cols : rows;
  std::vector<double> out(out_len, 0.0);
  if (axis == 0) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[j] += mv[i * cols + j];
    }
  } else {
    for (std::size_t i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += mv[i * cols + j];
      out[i] = acc;
    }
  }
  Tensor result = Tensor::from_values({out_len}, std::move(out));
  if (Tape* tape = recording_tape({&m})) {
    NodePtr mn = m.node();
    tape->record(result, [mn, rows, cols, axis](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(mn.get())) return;
      auto& gm = ctx.buffer(mn);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) gm[i * cols + j] += (axis == 0) ? g[j] : g[i];
      }
    });
  }
  return result;
}

Tensor mean_axis(const Tensor& m, std::size_t axis) {
  require_rank(m, 2, "mean_axis");
  const std::size_t count = (axis == 0) ? m.extent(0) : m.extent(1);
  if (count == 0) throw DimensionError("mean_axis: empty axis");
  return scale(sum_axis(m, axis), 1.0 / static_cast<double>(count));
}

namespace {

Tensor unary_elementwise(const Tensor& t, double (*fwd)(double), double (*dfdx)(double)) {
  const auto tv = t.values();
  std::vector<double> out(tv.size());
  for (std::size_t i = 0; i < tv.size(); ++i) out[i] = fwd(tv[i]);
  Tensor result = Tensor::from_values(t.shape(), std::move(out));
  if (Tape* tape = recording_tape({&t})) {
    NodePtr tn = t.node();
    tape->record(result, [tn, dfdx](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(tn.get())) return;
      auto& gt = ctx.buffer(tn);
      for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i] * dfdx(tn->values[i]);
    });
  }
  return result;
}

}  // namespace

Tensor relu(const Tensor& t) {
  return unary_elementwise(
      t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& t) {
  return unary_elementwise(
      t, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& t) {
  return unary_elementwise(
      t, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& t) {
  return unary_elementwise(
      t, [](double x) { return std::sqrt(x); },
      [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "dot");
  require_same_shape(a, b, "dot");
  const auto av = a.values();
  const auto bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  Tensor result = Tensor::scalar(acc);
  if (Tape* tape = recording_tape({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    tape->record(result, [an, bn](std::span<const double> g, BackwardContext& ctx) {
      if (BackwardContext::wants(an.get())) {
        auto& ga = ctx.buffer(an);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * bn->values[i];
      }
      if (BackwardContext::wants(bn.get())) {
        auto& gb = ctx.buffer(bn);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[0] * an->values[i];
      }
    });
  }
  return result;
}

Tensor softmax(const Tensor& x, double logit_scale) {
  require_rank(x, 1, "softmax");
  if (x.size() == 0) throw DimensionError("softmax: empty input");
  if (!(logit_scale > 0.0)) {
    throw ContractError("softmax: logit scale must be positive, got " +
                        std::to_string(logit_scale));
  }
  const auto xv = x.values();
  double max_logit = logit_scale * xv[0];
  for (std::size_t i = 1; i < xv.size(); ++i) {
    max_logit = std::max(max_logit, logit_scale * xv[i]);
  }
  std::vector<double> out(xv.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::exp(logit_scale * xv[i] - max_logit);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  Tensor result = Tensor::from_values(x.shape(), std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    NodePtr xn = x.node();
    NodePtr yn = result.node();
    tape->record(result, [xn, yn, logit_scale](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(xn.get())) return;
      // d/dx_j = s * y_j * (g_j - sum_i g_i y_i)
      const auto& y = yn->values;
      double weighted = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) weighted += g[i] * y[i];
      auto& gx = ctx.buffer(xn);
      for (std::size_t j = 0; j < y.size(); ++j) {
        gx[j] += logit_scale * y[j] * (g[j] - weighted);
      }
    });
  }
  return result;
}

Tensor logsumexp(const Tensor& x) {
  require_rank(x, 1, "logsumexp");
  if (x.size() == 0) throw DimensionError("logsumexp: empty input");
  const auto xv = x.values();
  double max_v = xv[0];
  for (double v : xv) max_v = std::max(max_v, v);
  double acc = 0.0;
  for (double v : xv) acc += std::exp(v - max_v);
  Tensor result = Tensor::scalar(max_v + std::log(acc));
  if (Tape* tape = recording_tape({&x})) {
    NodePtr xn = x.node();
    const double lse = result.value();
    tape->record(result, [xn, lse](std::span<const double> g, BackwardContext& ctx) {
      if (!BackwardContext::wants(xn.get())) return;
      auto& gx = ctx.buffer(xn);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += g[0] * std::exp(xn->values[i] - lse);
      }
    });
  }
  return result;
}

}  // namespace ltae

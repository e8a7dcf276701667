#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ltae/nn.hpp"
#include "ltae/tensor.hpp"

namespace ltae {

enum class TemporalKind { ltae, tae };

std::string temporal_kind_name(TemporalKind kind);
TemporalKind temporal_kind_from_name(const std::string& name);

// Hyper-parameters of the lightweight temporal attention encoder. The input
// channels are partitioned into `num_heads` contiguous groups; each head
// owns a trained master query and a small key projection over its group.
struct LTAEConfig {
  std::size_t input_dim = 256;  // channels of each sequence element
  std::size_t seq_len = 24;
  std::size_t num_heads = 16;
  std::size_t key_dim = 8;
  double time_scale = 1000.0;  // characteristic scale of the day encoding
  // Affine-chain widths of the output mlp; the first entry is the input width
  // and must equal input_dim (a single entry means no layers at all).
  std::vector<std::size_t> mlp_widths = {256, 128};
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t group_dim() const { return input_dim / num_heads; }
  std::size_t output_dim() const { return mlp_widths.back(); }
};

// Baseline encoder configuration: per-timestep keys and queries computed by
// one shared affine per head over the full input width, master query taken
// as the temporal average of the queries, values bypassed to the raw inputs.
// Concatenating the head outputs yields num_heads * input_dim channels, so
// mlp_widths must start there.
struct TAEConfig {
  std::size_t input_dim = 128;
  std::size_t seq_len = 24;
  std::size_t num_heads = 4;
  std::size_t key_dim = 8;
  double time_scale = 1000.0;
  std::vector<std::size_t> mlp_widths = {512, 128};
  std::uint64_t seed = 1;

  void validate() const;
  // The shared per-head projection emits keys and queries jointly.
  std::size_t qk_projection_width() const { return 2 * key_dim; }
  std::size_t concat_dim() const { return num_heads * input_dim; }
  std::size_t output_dim() const { return mlp_widths.back(); }

  // Baseline with the same attention geometry as `ref` and the same mlp tail,
  // widened at the front to the baseline's concatenation size.
  static TAEConfig matching(const LTAEConfig& ref);
};

// Attention state of one forward pass.
struct AttentionRecord {
  Tensor masks;                      // [num_heads x T], rows sum to 1
  std::vector<Tensor> head_outputs;  // per head, [group_dim] (baseline: [input_dim])
  Tensor output;                     // [mlp_widths.back()]
};

// Splits the channel dimension of [channels x T] into `num_heads` contiguous
// groups of channels/num_heads rows each. Concatenating the groups along
// axis 0 reconstructs the input exactly.
std::vector<Tensor> group_channels(const Tensor& embeddings, std::size_t num_heads);

// Sinusoidal encoding of an elapsed-day value: component i (1-based) equals
// sin(day / time_scale^(i/dim)).
Tensor positional_encoding(double day, std::size_t dim, double time_scale);

// Column t holds positional_encoding(days[t] - days[0], dim, time_scale).
Tensor positional_matrix(std::span<const double> days, std::size_t dim, double time_scale);

// Per-timestep affine key computation over the position-augmented group:
// column t of the result is projection(group[:,t] + positional[:,t]).
Tensor compute_keys(const Tensor& group, const Tensor& positional, const Linear& projection);

// Scaled softmax over time of the key/query dot products; the scale is
// 1/sqrt(key_dim) with key_dim taken from the keys' row count.
Tensor attention_mask(const Tensor& keys, const Tensor& query);

// Temporal sum of the position-augmented inputs weighted by the mask. The
// result lies in the convex hull of the augmented columns.
Tensor head_output(const Tensor& mask, const Tensor& group, const Tensor& positional);

class LtaeEncoder {
 public:
  explicit LtaeEncoder(LTAEConfig config);
  LtaeEncoder(LTAEConfig config, std::mt19937_64& rng);

  // embeddings: [input_dim x seq_len]; days: seq_len non-decreasing stamps.
  AttentionRecord forward(const Tensor& embeddings, std::span<const double> days) const;

  const LTAEConfig& config() const { return config_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

 private:
  LTAEConfig config_;
  std::vector<Linear> key_projections_;  // per head: group_dim -> key_dim
  std::vector<Tensor> queries_;          // per head: [key_dim], trained
  Mlp output_mlp_;
};

class TaeEncoder {
 public:
  explicit TaeEncoder(TAEConfig config);
  TaeEncoder(TAEConfig config, std::mt19937_64& rng);

  AttentionRecord forward(const Tensor& embeddings, std::span<const double> days) const;

  const TAEConfig& config() const { return config_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

 private:
  TAEConfig config_;
  std::vector<Linear> qk_projections_;  // per head: input_dim -> 2*key_dim
  Mlp output_mlp_;
};

}  // namespace ltae

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ltae/data.hpp"
#include "ltae/nn.hpp"
#include "ltae/temporal.hpp"
#include "ltae/tensor.hpp"

namespace ltae {

// Permutation-invariant encoder of one acquisition's pixel set: a shared
// per-pixel mlp, mean and standard-deviation pooling over the pixels, and a
// second mlp mapping the pooled statistics to the embedding width.
struct SetEncoderConfig {
  std::size_t channels = 10;
  std::vector<std::size_t> pixel_mlp = {10, 32};   // first width == channels
  std::vector<std::size_t> pooled_mlp = {64, 32};  // first width == 2 * pixel feature width

  void validate() const;
  std::size_t output_dim() const { return pooled_mlp.back(); }
};

class SetEncoder {
 public:
  SetEncoder(SetEncoderConfig config, std::mt19937_64& rng);

  // pixels: [N x C] with one row per sampled pixel; any N >= 1 works and the
  // result does not depend on the row order.
  Tensor encode(const Tensor& pixels) const;

  const SetEncoderConfig& config() const { return config_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

 private:
  SetEncoderConfig config_;
  Mlp pixel_mlp_;
  Mlp pooled_mlp_;
};

// Full classification pipeline: spatial set encoder, temporal attention
// encoder, and an mlp decoder emitting one logit per class. Samples that
// carry precomputed embeddings skip the spatial stage.
struct PipelineConfig {
  SetEncoderConfig spatial;
  TemporalKind temporal = TemporalKind::ltae;
  LTAEConfig ltae;  // read when temporal == ltae
  TAEConfig tae;    // read when temporal == tae
  std::vector<std::size_t> decoder_widths = {128, 64, 20};
  std::size_t num_classes = 20;
  std::uint64_t seed = 1;  // governs every stage; nested seeds are ignored

  void validate() const;
  std::size_t temporal_input_dim() const;
  std::size_t temporal_output_dim() const;
  std::size_t seq_len() const;
};

struct ClassifierOutput {
  Tensor logits;
  AttentionRecord attention;
};

class Classifier {
 public:
  explicit Classifier(PipelineConfig config);

  // Spatial stage only: [E x T] embedding columns for one sample.
  Tensor embed(const SequenceSample& sample) const;
  Tensor logits(const SequenceSample& sample) const;
  ClassifierOutput forward(const SequenceSample& sample) const;
  std::size_t predict(const SequenceSample& sample) const;

  const PipelineConfig& config() const { return config_; }
  std::vector<NamedParam> parameters();

 private:
  PipelineConfig config_;
  std::optional<SetEncoder> spatial_;
  std::optional<LtaeEncoder> ltae_;
  std::optional<TaeEncoder> tae_;
  Mlp decoder_;
};

}  // namespace ltae

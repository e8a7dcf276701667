#include "ltae/spatial.hpp"

#include <algorithm>
#include <utility>

#include "ltae/ops.hpp"

namespace ltae {

void SetEncoderConfig::validate() const {
  if (channels == 0) throw ConfigError("channels must be positive");
  if (pixel_mlp.empty() || pooled_mlp.empty()) {
    throw ConfigError("set encoder mlp widths must not be empty");
  }
  for (std::size_t w : pixel_mlp) {
    if (w == 0) throw ConfigError("set encoder mlp widths must be positive");
  }
  for (std::size_t w : pooled_mlp) {
    if (w == 0) throw ConfigError("set encoder mlp widths must be positive");
  }
  if (pixel_mlp.front() != channels) {
    throw ConfigError("per-pixel mlp must start at the channel count (" +
                      std::to_string(channels) + "), got " +
                      std::to_string(pixel_mlp.front()));
  }
  if (pooled_mlp.front() != 2 * pixel_mlp.back()) {
    throw ConfigError("pooled mlp must start at twice the pixel feature width (" +
                      std::to_string(2 * pixel_mlp.back()) + "), got " +
                      std::to_string(pooled_mlp.front()));
  }
}

SetEncoder::SetEncoder(SetEncoderConfig config, std::mt19937_64& rng)
    : config_(std::move(config)) {
  config_.validate();
  pixel_mlp_ = Mlp(config_.pixel_mlp, rng);
  pooled_mlp_ = Mlp(config_.pooled_mlp, rng);
}

Tensor SetEncoder::encode(const Tensor& pixels) const {
  if (pixels.rank() != 2) {
    throw DimensionError("pixel set must be a [pixels x channels] matrix, got " +
                         shape_to_string(pixels.shape()));
  }
  if (pixels.extent(0) == 0) throw DataError("cannot encode an empty pixel set");
  if (pixels.extent(1) != config_.channels) {
    throw DimensionError("pixel set has " + std::to_string(pixels.extent(1)) +
                         " channels, expected " + std::to_string(config_.channels));
  }
  // Shared per-pixel mlp, applied to every pixel column at once.
  Tensor features = pixel_mlp_.apply(transpose(pixels));  // [F x N]
  Tensor mean = mean_axis(features, 1);
  // Population standard deviation; a single pixel pools to a zero vector.
  Tensor centered = add_bias(features, scale(mean, -1.0));
  Tensor deviation = sqrt(mean_axis(mul(centered, centered), 1));
  std::vector<Tensor> pooled = {mean, deviation};
  return pooled_mlp_.apply(concat(pooled, 0));
}

void SetEncoder::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  pixel_mlp_.collect_parameters(prefix + ".pixel", out);
  pooled_mlp_.collect_parameters(prefix + ".pooled", out);
}

void PipelineConfig::validate() const {
  spatial.validate();
  if (temporal == TemporalKind::ltae) {
    ltae.validate();
  } else {
    tae.validate();
  }
  if (spatial.output_dim() != temporal_input_dim()) {
    throw ConfigError("spatial output width (" + std::to_string(spatial.output_dim()) +
                      ") must match the temporal input width (" +
                      std::to_string(temporal_input_dim()) + ")");
  }
  if (decoder_widths.empty()) throw ConfigError("decoder_widths must not be empty");
  for (std::size_t w : decoder_widths) {
    if (w == 0) throw ConfigError("decoder widths must be positive");
  }
  if (decoder_widths.front() != temporal_output_dim()) {
    throw ConfigError("decoder must start at the temporal output width (" +
                      std::to_string(temporal_output_dim()) + "), got " +
                      std::to_string(decoder_widths.front()));
  }
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (decoder_widths.back() != num_classes) {
    throw ConfigError("decoder must end at num_classes (" + std::to_string(num_classes) +
                      "), got " + std::to_string(decoder_widths.back()));
  }
}

std::size_t PipelineConfig::temporal_input_dim() const {
  return temporal == TemporalKind::ltae ? ltae.input_dim : tae.input_dim;
}

std::size_t PipelineConfig::temporal_output_dim() const {
  return temporal == TemporalKind::ltae ? ltae.output_dim() : tae.output_dim();
}

std::size_t PipelineConfig::seq_len() const {
  return temporal == TemporalKind::ltae ? ltae.seq_len : tae.seq_len;
}

Classifier::Classifier(PipelineConfig config) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  spatial_.emplace(config_.spatial, rng);
  if (config_.temporal == TemporalKind::ltae) {
    ltae_.emplace(config_.ltae, rng);
  } else {
    tae_.emplace(config_.tae, rng);
  }
  decoder_ = Mlp(config_.decoder_widths, rng);
}

Tensor Classifier::embed(const SequenceSample& sample) const {
  if (sample.kind == PayloadKind::embeddings) return sample.embeddings;
  if (sample.pixel_sets.size() != config_.seq_len()) {
    throw DimensionError("sample " + sample.id + " has " +
                         std::to_string(sample.pixel_sets.size()) +
                         " pixel sets, expected " + std::to_string(config_.seq_len()));
  }
  std::vector<Tensor> columns;
  columns.reserve(sample.pixel_sets.size());
  for (const Tensor& pixels : sample.pixel_sets) {
    Tensor e = spatial_->encode(pixels);
    columns.push_back(reshape(e, {e.size(), 1}));
  }
  return concat(columns, 1);
}

ClassifierOutput Classifier::forward(const SequenceSample& sample) const {
  Tensor embeddings = embed(sample);
  AttentionRecord record = config_.temporal == TemporalKind::ltae
                               ? ltae_->forward(embeddings, sample.days)
                               : tae_->forward(embeddings, sample.days);
  ClassifierOutput out;
  out.logits = decoder_.apply(record.output);
  out.attention = std::move(record);
  return out;
}

Tensor Classifier::logits(const SequenceSample& sample) const {
  return forward(sample).logits;
}

std::size_t Classifier::predict(const SequenceSample& sample) const {
  Tensor scores = logits(sample);
  auto values = scores.values();
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<NamedParam> Classifier::parameters() {
  std::vector<NamedParam> out;
  spatial_->collect_parameters("spatial", out);
  if (ltae_) ltae_->collect_parameters("temporal", out);
  if (tae_) tae_->collect_parameters("temporal", out);
  decoder_.collect_parameters("decoder", out);
  return out;
}

}  // namespace ltae

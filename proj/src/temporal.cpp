#include "ltae/temporal.hpp"

#include <cmath>

#include "ltae/ops.hpp"

namespace ltae {

namespace {

void validate_common(std::size_t input_dim, std::size_t seq_len, std::size_t num_heads,
                     std::size_t key_dim, double time_scale,
                     const std::vector<std::size_t>& mlp_widths) {
  if (input_dim == 0 || num_heads == 0) {
    throw ConfigError("input_dim and num_heads must be positive");
  }
  if (input_dim % num_heads != 0) {
    throw ConfigError("num_heads (" + std::to_string(num_heads) +
                      ") must divide input_dim (" + std::to_string(input_dim) + ")");
  }
  if (input_dim < num_heads) {
    throw ConfigError("input_dim must be at least num_heads");
  }
  if (key_dim == 0) throw ConfigError("key_dim must be positive");
  if (seq_len == 0) throw ConfigError("seq_len must be positive");
  if (!(time_scale > 0.0)) throw ConfigError("time_scale must be positive");
  if (mlp_widths.empty()) throw ConfigError("mlp_widths must not be empty");
  for (std::size_t w : mlp_widths) {
    if (w == 0) throw ConfigError("mlp widths must be positive");
  }
}

void check_days(std::span<const double> days, std::size_t seq_len) {
  if (days.size() != seq_len) {
    throw DimensionError("expected " + std::to_string(seq_len) + " day stamps, got " +
                         std::to_string(days.size()));
  }
  for (std::size_t t = 1; t < days.size(); ++t) {
    if (days[t] < days[t - 1]) {
      throw DataError("day stamps must be non-decreasing (violation at index " +
                      std::to_string(t) + ")");
    }
  }
}

void check_embeddings(const Tensor& e, std::size_t input_dim, std::size_t seq_len) {
  if (e.rank() != 2 || e.extent(0) != input_dim || e.extent(1) != seq_len) {
    throw DimensionError("expected embeddings of shape [" + std::to_string(input_dim) + "x" +
                         std::to_string(seq_len) + "], got " + shape_to_string(e.shape()));
  }
}

Tensor stack_rows(std::span<const Tensor> rows) {
  std::vector<Tensor> as_matrices;
  as_matrices.reserve(rows.size());
  for (const Tensor& r : rows) as_matrices.push_back(reshape(r, {1, r.size()}));
  return concat(as_matrices, 0);
}

}  // namespace

std::string temporal_kind_name(TemporalKind kind) {
  return kind == TemporalKind::ltae ? "ltae" : "tae";
}

TemporalKind temporal_kind_from_name(const std::string& name) {
  if (name == "ltae") return TemporalKind::ltae;
  if (name == "tae") return TemporalKind::tae;
  throw ConfigError("unknown temporal encoder kind: " + name);
}

void LTAEConfig::validate() const {
  validate_common(input_dim, seq_len, num_heads, key_dim, time_scale, mlp_widths);
  if (mlp_widths.front() != input_dim) {
    throw ConfigError("mlp_widths must start at input_dim (" + std::to_string(input_dim) +
                      "), got " + std::to_string(mlp_widths.front()));
  }
}

void TAEConfig::validate() const {
  validate_common(input_dim, seq_len, num_heads, key_dim, time_scale, mlp_widths);
  if (mlp_widths.front() != concat_dim()) {
    throw ConfigError("baseline mlp_widths must start at num_heads*input_dim (" +
                      std::to_string(concat_dim()) + "), got " +
                      std::to_string(mlp_widths.front()));
  }
}

TAEConfig TAEConfig::matching(const LTAEConfig& ref) {
  TAEConfig config;
  config.input_dim = ref.input_dim;
  config.seq_len = ref.seq_len;
  config.num_heads = ref.num_heads;
  config.key_dim = ref.key_dim;
  config.time_scale = ref.time_scale;
  config.seed = ref.seed;
  config.mlp_widths.assign(ref.mlp_widths.begin(), ref.mlp_widths.end());
  config.mlp_widths.front() = config.concat_dim();
  return config;
}

std::vector<Tensor> group_channels(const Tensor& embeddings, std::size_t num_heads) {
  if (embeddings.rank() != 2) {
    throw DimensionError("group_channels expects [channels x T], got " +
                         shape_to_string(embeddings.shape()));
  }
  const std::size_t channels = embeddings.extent(0);
  if (num_heads == 0 || channels % num_heads != 0) {
    throw ConfigError("cannot split " + std::to_string(channels) + " channels into " +
                      std::to_string(num_heads) + " equal groups");
  }
  const std::size_t group = channels / num_heads;
  std::vector<Tensor> out;
  out.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    out.push_back(slice(embeddings, 0, h * group, group));
  }
  return out;
}

Tensor positional_encoding(double day, std::size_t dim, double time_scale) {
  if (dim == 0) throw ConfigError("positional encoding dimension must be positive");
  if (!(time_scale > 0.0)) throw ConfigError("time_scale must be positive");
  std::vector<double> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double exponent = static_cast<double>(i + 1) / static_cast<double>(dim);
    values[i] = std::sin(day / std::pow(time_scale, exponent));
  }
  return Tensor::from_values({dim}, std::move(values));
}

Tensor positional_matrix(std::span<const double> days, std::size_t dim, double time_scale) {
  if (days.empty()) throw DimensionError("positional_matrix: no day stamps");
  std::vector<double> values(dim * days.size());
  for (std::size_t i = 0; i < dim; ++i) {
    const double exponent = static_cast<double>(i + 1) / static_cast<double>(dim);
    const double freq = 1.0 / std::pow(time_scale, exponent);
    for (std::size_t t = 0; t < days.size(); ++t) {
      values[i * days.size() + t] = std::sin((days[t] - days[0]) * freq);
    }
  }
  return Tensor::from_values({dim, days.size()}, std::move(values));
}

Tensor compute_keys(const Tensor& group, const Tensor& positional, const Linear& projection) {
  return projection.apply(add(group, positional));
}

Tensor attention_mask(const Tensor& keys, const Tensor& query) {
  if (keys.rank() != 2 || query.rank() != 1 || keys.extent(0) != query.extent(0)) {
    throw DimensionError("attention_mask: keys " + shape_to_string(keys.shape()) +
                         " incompatible with query " + shape_to_string(query.shape()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(keys.extent(0)));
  Tensor logits = matvec(transpose(keys), query);
  return softmax(logits, scale);
}

Tensor head_output(const Tensor& mask, const Tensor& group, const Tensor& positional) {
  return matvec(add(group, positional), mask);
}

LtaeEncoder::LtaeEncoder(LTAEConfig config) {
  std::mt19937_64 rng(config.seed);
  *this = LtaeEncoder(std::move(config), rng);
}

LtaeEncoder::LtaeEncoder(LTAEConfig config, std::mt19937_64& rng) : config_(std::move(config)) {
  config_.validate();
  const std::size_t group = config_.group_dim();
  key_projections_.reserve(config_.num_heads);
  queries_.reserve(config_.num_heads);
  const double query_scale = 1.0 / std::sqrt(static_cast<double>(config_.key_dim));
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    key_projections_.emplace_back(group, config_.key_dim, rng);
    queries_.push_back(
        scaled_normal({config_.key_dim}, query_scale, rng).set_requires_grad(true));
  }
  output_mlp_ = Mlp(config_.mlp_widths, rng);
}

AttentionRecord LtaeEncoder::forward(const Tensor& embeddings,
                                     std::span<const double> days) const {
  check_embeddings(embeddings, config_.input_dim, config_.seq_len);
  check_days(days, config_.seq_len);

  const Tensor positional = positional_matrix(days, config_.group_dim(), config_.time_scale);
  const std::vector<Tensor> groups = group_channels(embeddings, config_.num_heads);

  AttentionRecord record;
  std::vector<Tensor> masks;
  record.head_outputs.reserve(config_.num_heads);
  masks.reserve(config_.num_heads);
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    Tensor keys = compute_keys(groups[h], positional, key_projections_[h]);
    Tensor mask = attention_mask(keys, queries_[h]);
    masks.push_back(mask);
    record.head_outputs.push_back(head_output(mask, groups[h], positional));
  }
  record.masks = stack_rows(masks);
  Tensor concatenated = concat(record.head_outputs, 0);
  record.output = output_mlp_.apply(concatenated);
  return record;
}

void LtaeEncoder::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    key_projections_[h].collect_parameters(prefix + ".head" + std::to_string(h) + ".key", out);
    out.push_back({prefix + ".head" + std::to_string(h) + ".query", queries_[h]});
  }
  output_mlp_.collect_parameters(prefix + ".mlp", out);
}

TaeEncoder::TaeEncoder(TAEConfig config) {
  std::mt19937_64 rng(config.seed);
  *this = TaeEncoder(std::move(config), rng);
}

TaeEncoder::TaeEncoder(TAEConfig config, std::mt19937_64& rng) : config_(std::move(config)) {
  config_.validate();
  qk_projections_.reserve(config_.num_heads);
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    qk_projections_.emplace_back(config_.input_dim, config_.qk_projection_width(), rng);
  }
  output_mlp_ = Mlp(config_.mlp_widths, rng);
}

AttentionRecord TaeEncoder::forward(const Tensor& embeddings,
                                    std::span<const double> days) const {
  check_embeddings(embeddings, config_.input_dim, config_.seq_len);
  check_days(days, config_.seq_len);

  // Position information enters keys and queries only; values stay raw.
  const Tensor positional = positional_matrix(days, config_.input_dim, config_.time_scale);
  const Tensor augmented = add(embeddings, positional);

  AttentionRecord record;
  std::vector<Tensor> masks;
  record.head_outputs.reserve(config_.num_heads);
  masks.reserve(config_.num_heads);
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    Tensor key_query = qk_projections_[h].apply(augmented);  // [2K x T]
    Tensor keys = slice(key_query, 0, 0, config_.key_dim);
    Tensor queries = slice(key_query, 0, config_.key_dim, config_.key_dim);
    Tensor master_query = mean_axis(queries, 1);
    Tensor mask = attention_mask(keys, master_query);
    masks.push_back(mask);
    record.head_outputs.push_back(matvec(embeddings, mask));
  }
  record.masks = stack_rows(masks);
  Tensor concatenated = concat(record.head_outputs, 0);
  record.output = output_mlp_.apply(concatenated);
  return record;
}

void TaeEncoder::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t h = 0; h < config_.num_heads; ++h) {
    qk_projections_[h].collect_parameters(prefix + ".head" + std::to_string(h) + ".key_query",
                                          out);
  }
  output_mlp_.collect_parameters(prefix + ".mlp", out);
}

}  // namespace ltae

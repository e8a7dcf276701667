#include "ltae/complexity.hpp"

#include <cstdio>
#include <map>

#include "ltae/errors.hpp"

namespace ltae {

namespace {

std::uint64_t mlp_param_count(const std::vector<std::size_t>& widths) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    count += static_cast<std::uint64_t>(widths[i + 1]) * widths[i] + widths[i + 1];
  }
  return count;
}

// Entries of an affine output count 2*fan_in FLOPs each (multiplies plus the
// accumulation and bias adds); relu costs 1 per hidden element.
std::uint64_t mlp_flop_count(const std::vector<std::size_t>& widths) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    count += 2 * static_cast<std::uint64_t>(widths[i]) * widths[i + 1] + widths[i + 1];
    if (i + 2 < widths.size()) count += widths[i + 1];  // relu on the hidden layer
  }
  return count;
}

std::string product_to_text(const SymbolProduct& product) {
  // Fold repeated symbols into exponents, keeping first-appearance order.
  std::vector<std::pair<std::string, std::size_t>> factors;
  for (const std::string& symbol : product) {
    bool found = false;
    for (auto& [s, count] : factors) {
      if (s == symbol) {
        ++count;
        found = true;
      }
    }
    if (!found) factors.emplace_back(symbol, 1);
  }
  std::string out;
  for (const auto& [symbol, count] : factors) {
    out += symbol;
    if (count > 1) out += "^" + std::to_string(count);
  }
  return out;
}

std::string convention_text() {
  return "convention: 1 multiply-accumulate = 2 FLOPs; exp and division = 2 FLOPs each;\n"
         "convention: keys = T*H*(2*G*K + G) with G the per-head channel count "
         "(key affine plus positional adds; the baseline projects all E channels per head)\n"
         "convention: mask = query/key dot products 2*T*K per head, plus softmax "
         "(exp and divide per timestep), plus the baseline's per-timestep query "
         "affine and temporal averaging\n"
         "convention: output = weighted temporal sum, 2 FLOPs per output channel "
         "and timestep\n"
         "convention: mlp = 2*in*out + out per affine layer plus 1 per hidden "
         "relu element\n";
}

}  // namespace

std::vector<AsymptoticPart> asymptotic_cost(const std::string& method) {
  if (method == "ltae") {
    return {{"keys", {{"T", "E", "K"}}},
            {"mask", {{"H", "T", "K"}}},
            {"output", {{"E", "X"}}}};
  }
  if (method == "tae") {
    return {{"keys", {{"H", "T", "E", "K"}}},
            {"mask", {{"H", "T", "K"}}},
            {"output", {{"H", "E", "X"}}}};
  }
  if (method == "transformer") {
    return {{"keys", {{"H", "T", "E", "K"}}},
            {"mask", {{"H", "T", "T", "K"}}},
            {"output", {{"H", "E", "X"}}}};
  }
  if (method == "gru") {
    // The recurrent state update plays the role of both keys and mask.
    return {{"keys+mask", {{"M", "T", "E"}, {"M", "T", "M"}}},
            {"output", {{"M", "X"}}}};
  }
  throw ConfigError("unknown method: " + method +
                    " (expected ltae, tae, transformer, or gru)");
}

std::string asymptotic_to_text(const std::vector<AsymptoticPart>& parts) {
  std::string out;
  for (const AsymptoticPart& part : parts) {
    if (!out.empty()) out += "; ";
    out += part.name + " O(";
    for (std::size_t i = 0; i < part.terms.size(); ++i) {
      if (i > 0) out += " + ";
      out += product_to_text(part.terms[i]);
    }
    out += ")";
  }
  return out;
}

std::string CostReport::to_text() const {
  char buffer[256];
  std::string out;
  std::snprintf(buffer, sizeof(buffer), "param_count: %llu\n",
                static_cast<unsigned long long>(param_count));
  out += buffer;
  const std::pair<const char*, std::uint64_t> fields[] = {
      {"flops_keys", flops_keys},
      {"flops_mask", flops_mask},
      {"flops_output", flops_output},
      {"flops_mlp", flops_mlp},
      {"flops_total", flops_total},
  };
  for (const auto& [name, value] : fields) {
    std::snprintf(buffer, sizeof(buffer), "%s: %llu\n", name,
                  static_cast<unsigned long long>(value));
    out += buffer;
  }
  std::snprintf(buffer, sizeof(buffer), "mflops_total: %.6f\n",
                static_cast<double>(flops_total) / 1e6);
  out += buffer;
  out += "asymptotic: " + asymptotic_to_text(asymptotic) + "\n";
  out += convention_text();
  return out;
}

std::uint64_t count_params(const LTAEConfig& config) {
  config.validate();
  const std::uint64_t group = config.group_dim();
  const std::uint64_t per_head = group * config.key_dim + config.key_dim  // key affine
                                 + config.key_dim;                        // master query
  return config.num_heads * per_head + mlp_param_count(config.mlp_widths);
}

std::uint64_t count_params(const TAEConfig& config) {
  config.validate();
  const std::uint64_t joint = 2 * static_cast<std::uint64_t>(config.key_dim);
  const std::uint64_t per_head = joint * config.input_dim + joint;
  return config.num_heads * per_head + mlp_param_count(config.mlp_widths);
}

CostReport count_flops(const LTAEConfig& config) {
  config.validate();
  const std::uint64_t T = config.seq_len;
  const std::uint64_t H = config.num_heads;
  const std::uint64_t G = config.group_dim();
  const std::uint64_t K = config.key_dim;

  CostReport report;
  report.param_count = count_params(config);
  report.flops_keys = T * H * (2 * G * K + G);
  report.flops_mask = H * 2 * T * K + 4 * T * H;
  report.flops_output = H * T * 2 * G;
  report.flops_mlp = mlp_flop_count(config.mlp_widths);
  report.flops_total =
      report.flops_keys + report.flops_mask + report.flops_output + report.flops_mlp;
  report.asymptotic = asymptotic_cost("ltae");
  return report;
}

CostReport count_flops(const TAEConfig& config) {
  config.validate();
  const std::uint64_t T = config.seq_len;
  const std::uint64_t H = config.num_heads;
  const std::uint64_t E = config.input_dim;
  const std::uint64_t K = config.key_dim;

  CostReport report;
  report.param_count = count_params(config);
  // Every head projects the full input width, so the key cost carries the
  // head count that channel grouping removes.
  report.flops_keys = T * H * (2 * E * K + E);
  // The mask additionally pays for the per-timestep query affine and the
  // temporal averaging that forms the master query.
  report.flops_mask = T * H * 2 * E * K + T * H * K + H * 2 * T * K + 4 * T * H;
  report.flops_output = H * T * 2 * E;
  report.flops_mlp = mlp_flop_count(config.mlp_widths);
  report.flops_total =
      report.flops_keys + report.flops_mask + report.flops_output + report.flops_mlp;
  report.asymptotic = asymptotic_cost("tae");
  return report;
}

std::uint64_t TemporalPreset::params() const {
  return kind == TemporalKind::ltae ? count_params(ltae) : count_params(tae);
}

CostReport TemporalPreset::flops() const {
  return kind == TemporalKind::ltae ? count_flops(ltae) : count_flops(tae);
}

namespace {

TemporalPreset ltae_preset(std::string name, std::size_t e, std::size_t h, std::size_t k,
                           std::vector<std::size_t> mlp) {
  TemporalPreset preset;
  preset.name = std::move(name);
  preset.kind = TemporalKind::ltae;
  preset.ltae.input_dim = e;
  preset.ltae.num_heads = h;
  preset.ltae.key_dim = k;
  preset.ltae.mlp_widths = std::move(mlp);
  return preset;
}

TemporalPreset tae_preset(std::string name, std::size_t e, std::size_t h, std::size_t k,
                          std::vector<std::size_t> mlp) {
  TemporalPreset preset;
  preset.name = std::move(name);
  preset.kind = TemporalKind::tae;
  preset.tae.input_dim = e;
  preset.tae.num_heads = h;
  preset.tae.key_dim = k;
  preset.tae.mlp_widths = std::move(mlp);
  return preset;
}

std::vector<TemporalPreset> build_presets() {
  std::vector<TemporalPreset> presets;
  presets.push_back(ltae_preset("ltae-1", 128, 8, 8, {128}));
  presets.push_back(ltae_preset("ltae-2", 128, 16, 8, {128, 128}));
  presets.push_back(ltae_preset("ltae-3", 256, 16, 8, {256, 128}));
  presets.push_back(ltae_preset("ltae-4", 512, 32, 8, {512, 128}));
  presets.push_back(ltae_preset("ltae-5", 1024, 32, 8, {1024, 256, 128}));
  presets.push_back(ltae_preset("ltae-6", 2048, 64, 8, {2048, 1024, 256, 128}));
  presets.push_back(ltae_preset("ltae-default", 256, 16, 8, {256, 128}));
  presets.push_back(tae_preset("tae-1", 64, 2, 8, {128, 128}));
  presets.push_back(tae_preset("tae-2", 64, 4, 8, {256, 128}));
  presets.push_back(tae_preset("tae-3", 128, 4, 8, {512, 128}));
  presets.push_back(tae_preset("tae-4", 256, 4, 8, {1024, 128}));
  presets.push_back(tae_preset("tae-5", 256, 4, 8, {1024, 256, 128}));
  presets.push_back(tae_preset("tae-6", 256, 8, 8, {2048, 256, 128}));
  presets.push_back(tae_preset("tae-7", 1024, 8, 16, {8192, 256, 128}));
  return presets;
}

}  // namespace

const std::vector<TemporalPreset>& temporal_presets() {
  static const std::vector<TemporalPreset> presets = build_presets();
  return presets;
}

const TemporalPreset& find_preset(const std::string& name) {
  for (const TemporalPreset& preset : temporal_presets()) {
    if (preset.name == name) return preset;
  }
  std::string known;
  for (const TemporalPreset& preset : temporal_presets()) {
    if (!known.empty()) known += ", ";
    known += preset.name;
  }
  throw ConfigError("unknown preset: " + name + " (known: " + known + ")");
}

}  // namespace ltae

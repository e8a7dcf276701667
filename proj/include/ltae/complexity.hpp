#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltae/temporal.hpp"

namespace ltae {

// One product of cost symbols, e.g. {T,E,K}. Symbols: T sequence length,
// E input channels, K key width, H heads, M recurrent state width, X output
// width.
using SymbolProduct = std::vector<std::string>;

struct AsymptoticPart {
  std::string name;                  // "keys", "mask", "output", "keys+mask"
  std::vector<SymbolProduct> terms;  // sum of products
};

// Leading cost terms of a temporal feature extractor; method is one of
// "ltae", "tae", "transformer", "gru".
std::vector<AsymptoticPart> asymptotic_cost(const std::string& method);
std::string asymptotic_to_text(const std::vector<AsymptoticPart>& parts);

// Exact inference cost of the temporal module for one sequence, split into
// the key computation, the attention masks, the weighted head outputs, and
// the output mlp. The counting convention is part of the serialized report.
struct CostReport {
  std::uint64_t param_count = 0;
  std::uint64_t flops_keys = 0;
  std::uint64_t flops_mask = 0;
  std::uint64_t flops_output = 0;
  std::uint64_t flops_mlp = 0;
  std::uint64_t flops_total = 0;
  std::vector<AsymptoticPart> asymptotic;

  std::string to_text() const;
};

// Closed-form parameter counts of the temporal module alone; they equal a
// brute-force enumeration of every instantiated parameter tensor.
std::uint64_t count_params(const LTAEConfig& config);
std::uint64_t count_params(const TAEConfig& config);

CostReport count_flops(const LTAEConfig& config);
CostReport count_flops(const TAEConfig& config);

// Named temporal-module presets mirroring the published configuration
// tables, ordered small to large per family, plus the "ltae-default"
// alias for the reference configuration E=256, H=16, K=8, mlp 256-128.
struct TemporalPreset {
  std::string name;
  TemporalKind kind = TemporalKind::ltae;
  LTAEConfig ltae;  // read when kind == ltae
  TAEConfig tae;    // read when kind == tae

  std::uint64_t params() const;
  CostReport flops() const;
};

const std::vector<TemporalPreset>& temporal_presets();
const TemporalPreset& find_preset(const std::string& name);

}  // namespace ltae

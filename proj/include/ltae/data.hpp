#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ltae/tensor.hpp"

namespace ltae {

enum class PayloadKind { embeddings, pixel_sets };

std::string payload_kind_name(PayloadKind kind);
PayloadKind payload_kind_from_name(const std::string& name);

// One labelled time series: T acquisition days plus either precomputed
// embedding columns or one pixel set per acquisition.
struct SequenceSample {
  std::string id;
  std::size_t label = 0;
  std::vector<double> days;  // non-decreasing, non-negative
  PayloadKind kind = PayloadKind::embeddings;
  Tensor embeddings;               // kind == embeddings: [E x T]
  std::vector<Tensor> pixel_sets;  // kind == pixel_sets: T matrices [N x C]

  std::size_t seq_len() const { return days.size(); }
  void validate() const;
};

// Reads one JSON record per line. Day stamps are shifted so every sample
// starts at day zero. A file without records yields an empty dataset and a
// warning line on `warnings` (when given). Malformed or mutually
// inconsistent records raise DataError naming the offending line or sample.
std::vector<SequenceSample> load_dataset(const std::string& path,
                                         std::ostream* warnings = nullptr);
void save_dataset(const std::string& path, const std::vector<SequenceSample>& samples);

// Synthetic dataset recipe: each class carries a Gaussian bump of amplitude
// one centred on its event day, written into the first ceil(C/2) channels,
// with i.i.d. Gaussian noise added everywhere.
struct SynthSpec {
  std::size_t num_classes = 4;
  std::size_t seq_len = 24;
  std::size_t channels = 10;
  std::size_t samples_per_class = 100;
  std::vector<double> event_centers = {40.0, 110.0, 180.0, 250.0};  // days
  double event_width = 12.0;  // gaussian sigma, in days
  double noise = 0.3;
  PayloadKind payload = PayloadKind::embeddings;
  std::size_t pixels_per_set = 4;  // only read for pixel-set payloads
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t signal_channels() const { return (channels + 1) / 2; }
};

// Acquisition days spread uniformly over [0, 300].
std::vector<double> synthetic_days(std::size_t seq_len);

// Deterministic per seed; samples are emitted class by class.
std::vector<SequenceSample> generate_synthetic(const SynthSpec& spec);

}  // namespace ltae

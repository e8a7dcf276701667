#include "ltae/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <utility>

#include <json.hpp>

#include "ltae/errors.hpp"

namespace ltae {

namespace {

using nlohmann::json;

json matrix_to_json(const Tensor& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.extent(0); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < t.extent(1); ++c) row.push_back(t.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw DataError(what + " must be a non-empty array of numeric rows");
  }
  const std::size_t r = rows.size();
  const std::size_t c = rows.front().size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const json& row : rows) {
    if (!row.is_array() || row.size() != c) {
      throw DataError(what + " has ragged rows");
    }
    for (const json& v : row) {
      if (!v.is_number()) throw DataError(what + " holds a non-numeric entry");
      values.push_back(v.get<double>());
    }
  }
  return Tensor::from_values({r, c}, std::move(values));
}

json sample_to_json(const SequenceSample& sample) {
  json j;
  j["id"] = sample.id;
  j["label"] = sample.label;
  j["days"] = sample.days;
  j["payload_kind"] = payload_kind_name(sample.kind);
  if (sample.kind == PayloadKind::embeddings) {
    j["payload"] = matrix_to_json(sample.embeddings);
  } else {
    json sets = json::array();
    for (const Tensor& pixels : sample.pixel_sets) sets.push_back(matrix_to_json(pixels));
    j["payload"] = std::move(sets);
  }
  return j;
}

SequenceSample sample_from_json(const json& j) {
  SequenceSample sample;
  sample.id = j.at("id").get<std::string>();
  sample.label = j.at("label").get<std::size_t>();
  sample.days = j.at("days").get<std::vector<double>>();
  sample.kind = payload_kind_from_name(j.at("payload_kind").get<std::string>());
  const json& payload = j.at("payload");
  if (sample.kind == PayloadKind::embeddings) {
    sample.embeddings = matrix_from_json(payload, "embedding payload");
  } else {
    if (!payload.is_array()) throw DataError("pixel-set payload must be an array");
    for (std::size_t t = 0; t < payload.size(); ++t) {
      sample.pixel_sets.push_back(
          matrix_from_json(payload[t], "pixel set " + std::to_string(t)));
    }
  }
  return sample;
}

std::string padded_index(std::size_t value) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%04zu", value);
  return buffer;
}

}  // namespace

std::string payload_kind_name(PayloadKind kind) {
  return kind == PayloadKind::embeddings ? "embeddings" : "pixel_sets";
}

PayloadKind payload_kind_from_name(const std::string& name) {
  if (name == "embeddings") return PayloadKind::embeddings;
  if (name == "pixel_sets") return PayloadKind::pixel_sets;
  throw DataError("unknown payload kind: " + name);
}

void SequenceSample::validate() const {
  if (days.empty()) throw DataError("sample " + id + " has no observations");
  if (days.front() < 0.0) {
    throw DataError("sample " + id + " has a negative day stamp");
  }
  for (std::size_t t = 1; t < days.size(); ++t) {
    if (days[t] < days[t - 1]) {
      throw DataError("sample " + id + " has decreasing day stamps at index " +
                      std::to_string(t));
    }
  }
  if (kind == PayloadKind::embeddings) {
    if (embeddings.rank() != 2 || embeddings.extent(1) != days.size() ||
        embeddings.extent(0) == 0) {
      throw DataError("sample " + id + " embeddings " + shape_to_string(embeddings.shape()) +
                      " do not match " + std::to_string(days.size()) + " observations");
    }
  } else {
    if (pixel_sets.size() != days.size()) {
      throw DataError("sample " + id + " has " + std::to_string(pixel_sets.size()) +
                      " pixel sets for " + std::to_string(days.size()) + " observations");
    }
    std::size_t channels = 0;
    for (std::size_t t = 0; t < pixel_sets.size(); ++t) {
      const Tensor& pixels = pixel_sets[t];
      if (pixels.rank() != 2 || pixels.extent(0) == 0 || pixels.extent(1) == 0) {
        throw DataError("sample " + id + " has an empty pixel set at observation " +
                        std::to_string(t));
      }
      if (t == 0) {
        channels = pixels.extent(1);
      } else if (pixels.extent(1) != channels) {
        throw DataError("sample " + id + " mixes channel counts across observations");
      }
    }
  }
}

std::vector<SequenceSample> load_dataset(const std::string& path, std::ostream* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::vector<SequenceSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SequenceSample sample;
    try {
      sample = sample_from_json(json::parse(line));
    } catch (const json::exception& err) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + err.what());
    } catch (const Error& err) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
    if (!sample.days.empty()) {
      const double first = sample.days.front();
      for (double& day : sample.days) day -= first;
    }
    try {
      sample.validate();
    } catch (const Error& err) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
    if (!samples.empty()) {
      const SequenceSample& first = samples.front();
      if (sample.kind != first.kind) {
        throw DataError(path + ": sample " + sample.id + " mixes payload kinds");
      }
      if (sample.seq_len() != first.seq_len()) {
        throw DataError(path + ": sample " + sample.id + " has " +
                        std::to_string(sample.seq_len()) + " observations, expected " +
                        std::to_string(first.seq_len()));
      }
      if (sample.kind == PayloadKind::embeddings &&
          sample.embeddings.extent(0) != first.embeddings.extent(0)) {
        throw DataError(path + ": sample " + sample.id + " has " +
                        std::to_string(sample.embeddings.extent(0)) +
                        " channels, expected " +
                        std::to_string(first.embeddings.extent(0)));
      }
      if (sample.kind == PayloadKind::pixel_sets &&
          sample.pixel_sets.front().extent(1) != first.pixel_sets.front().extent(1)) {
        throw DataError(path + ": sample " + sample.id + " has " +
                        std::to_string(sample.pixel_sets.front().extent(1)) +
                        " channels, expected " +
                        std::to_string(first.pixel_sets.front().extent(1)));
      }
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty() && warnings != nullptr) {
    *warnings << "warning: dataset " << path << " holds no records\n";
  }
  return samples;
}

void save_dataset(const std::string& path, const std::vector<SequenceSample>& samples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const SequenceSample& sample : samples) {
    out << sample_to_json(sample).dump() << '\n';
  }
  if (!out) throw DataError("failed while writing " + path);
}

void SynthSpec::validate() const {
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (seq_len < 2) throw ConfigError("seq_len must be at least 2");
  if (channels == 0) throw ConfigError("channels must be positive");
  if (samples_per_class == 0) throw ConfigError("samples_per_class must be positive");
  if (event_centers.size() != num_classes) {
    throw ConfigError("expected " + std::to_string(num_classes) + " event centers, got " +
                      std::to_string(event_centers.size()));
  }
  std::set<double> distinct(event_centers.begin(), event_centers.end());
  if (distinct.size() != event_centers.size()) {
    throw ConfigError("event centers must be distinct across classes");
  }
  if (!(event_width > 0.0)) throw ConfigError("event_width must be positive");
  if (noise < 0.0) throw ConfigError("noise must be non-negative");
  if (payload == PayloadKind::pixel_sets && pixels_per_set == 0) {
    throw ConfigError("pixels_per_set must be positive");
  }
}

std::vector<double> synthetic_days(std::size_t seq_len) {
  std::vector<double> days(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    days[t] = 300.0 * static_cast<double>(t) / static_cast<double>(seq_len - 1);
  }
  return days;
}

std::vector<SequenceSample> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const std::vector<double> days = synthetic_days(spec.seq_len);
  const std::size_t signal = spec.signal_channels();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto bump = [&](std::size_t cls, std::size_t ch, std::size_t t) {
    if (ch >= signal) return 0.0;
    const double delta = days[t] - spec.event_centers[cls];
    return std::exp(-delta * delta / (2.0 * spec.event_width * spec.event_width));
  };

  std::vector<SequenceSample> samples;
  samples.reserve(spec.num_classes * spec.samples_per_class);
  for (std::size_t cls = 0; cls < spec.num_classes; ++cls) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      SequenceSample sample;
      sample.id = "synth-c" + std::to_string(cls) + "-" + padded_index(s);
      sample.label = cls;
      sample.days = days;
      sample.kind = spec.payload;
      if (spec.payload == PayloadKind::embeddings) {
        std::vector<double> values(spec.channels * spec.seq_len);
        for (std::size_t ch = 0; ch < spec.channels; ++ch) {
          for (std::size_t t = 0; t < spec.seq_len; ++t) {
            values[ch * spec.seq_len + t] = bump(cls, ch, t) + spec.noise * unit(rng);
          }
        }
        sample.embeddings = Tensor::from_values({spec.channels, spec.seq_len},
                                                std::move(values));
      } else {
        sample.pixel_sets.reserve(spec.seq_len);
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
          std::vector<double> values(spec.pixels_per_set * spec.channels);
          for (std::size_t n = 0; n < spec.pixels_per_set; ++n) {
            for (std::size_t ch = 0; ch < spec.channels; ++ch) {
              values[n * spec.channels + ch] = bump(cls, ch, t) + spec.noise * unit(rng);
            }
          }
          sample.pixel_sets.push_back(
              Tensor::from_values({spec.pixels_per_set, spec.channels}, std::move(values)));
        }
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

}  // namespace ltae

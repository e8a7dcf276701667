#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ltae/data.hpp"
#include "ltae/spatial.hpp"
#include "ltae/training.hpp"

namespace ltae {

// JSON bindings for every configuration struct. Reading starts from the
// struct's current values, so absent keys keep their defaults; unknown keys
// are rejected to catch config typos early.
void to_json(nlohmann::json& j, const LTAEConfig& c);
void from_json(const nlohmann::json& j, LTAEConfig& c);
void to_json(nlohmann::json& j, const TAEConfig& c);
void from_json(const nlohmann::json& j, TAEConfig& c);
void to_json(nlohmann::json& j, const SetEncoderConfig& c);
void from_json(const nlohmann::json& j, SetEncoderConfig& c);
void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);
void to_json(nlohmann::json& j, const TrainSettings& s);
void from_json(const nlohmann::json& j, TrainSettings& s);
void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

// Parses a JSON config file; // and /* */ comments are permitted. Raises
// ConfigError on unreadable or malformed input.
nlohmann::json load_config_file(const std::string& path);

// Checkpoints carry the pipeline configuration and every named parameter
// tensor; doubles survive the round trip bit-exactly.
void save_checkpoint(const std::string& path, Classifier& model);
Classifier load_checkpoint(const std::string& path);

}  // namespace ltae

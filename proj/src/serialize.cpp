#include "ltae/serialize.hpp"

#include <fstream>
#include <initializer_list>
#include <map>

#include "ltae/errors.hpp"

namespace ltae {

namespace {

using nlohmann::json;

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(what + " has an unknown key: " + key);
  }
}

}  // namespace

void to_json(json& j, const LTAEConfig& c) {
  j = json{{"input_dim", c.input_dim},   {"seq_len", c.seq_len},
           {"num_heads", c.num_heads},   {"key_dim", c.key_dim},
           {"time_scale", c.time_scale}, {"mlp_widths", c.mlp_widths},
           {"seed", c.seed}};
}

void from_json(const json& j, LTAEConfig& c) {
  expect_keys(j, {"input_dim", "seq_len", "num_heads", "key_dim", "time_scale",
                  "mlp_widths", "seed"},
              "temporal encoder config");
  c.input_dim = j.value("input_dim", c.input_dim);
  c.seq_len = j.value("seq_len", c.seq_len);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.key_dim = j.value("key_dim", c.key_dim);
  c.time_scale = j.value("time_scale", c.time_scale);
  c.mlp_widths = j.value("mlp_widths", c.mlp_widths);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const TAEConfig& c) {
  j = json{{"input_dim", c.input_dim},   {"seq_len", c.seq_len},
           {"num_heads", c.num_heads},   {"key_dim", c.key_dim},
           {"time_scale", c.time_scale}, {"mlp_widths", c.mlp_widths},
           {"seed", c.seed}};
}

void from_json(const json& j, TAEConfig& c) {
  expect_keys(j, {"input_dim", "seq_len", "num_heads", "key_dim", "time_scale",
                  "mlp_widths", "seed"},
              "baseline encoder config");
  c.input_dim = j.value("input_dim", c.input_dim);
  c.seq_len = j.value("seq_len", c.seq_len);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.key_dim = j.value("key_dim", c.key_dim);
  c.time_scale = j.value("time_scale", c.time_scale);
  c.mlp_widths = j.value("mlp_widths", c.mlp_widths);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const SetEncoderConfig& c) {
  j = json{{"channels", c.channels},
           {"pixel_mlp", c.pixel_mlp},
           {"pooled_mlp", c.pooled_mlp}};
}

void from_json(const json& j, SetEncoderConfig& c) {
  expect_keys(j, {"channels", "pixel_mlp", "pooled_mlp"}, "spatial encoder config");
  c.channels = j.value("channels", c.channels);
  c.pixel_mlp = j.value("pixel_mlp", c.pixel_mlp);
  c.pooled_mlp = j.value("pooled_mlp", c.pooled_mlp);
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"spatial", c.spatial},
           {"temporal", temporal_kind_name(c.temporal)},
           {"ltae", c.ltae},
           {"tae", c.tae},
           {"decoder_widths", c.decoder_widths},
           {"num_classes", c.num_classes},
           {"seed", c.seed}};
}

void from_json(const json& j, PipelineConfig& c) {
  expect_keys(j, {"spatial", "temporal", "ltae", "tae", "decoder_widths", "num_classes",
                  "seed"},
              "pipeline config");
  if (j.contains("spatial")) from_json(j.at("spatial"), c.spatial);
  if (j.contains("temporal")) {
    c.temporal = temporal_kind_from_name(j.at("temporal").get<std::string>());
  }
  if (j.contains("ltae")) from_json(j.at("ltae"), c.ltae);
  if (j.contains("tae")) from_json(j.at("tae"), c.tae);
  c.decoder_widths = j.value("decoder_widths", c.decoder_widths);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const TrainSettings& s) {
  j = json{{"epochs", s.epochs},
           {"batch_size", s.batch_size},
           {"learning_rate", s.learning_rate},
           {"optimizer", optimizer_kind_name(s.optimizer)},
           {"seed", s.seed},
           {"folds", s.folds},
           {"val_fraction", s.val_fraction}};
}

void from_json(const json& j, TrainSettings& s) {
  expect_keys(j, {"epochs", "batch_size", "learning_rate", "optimizer", "seed", "folds",
                  "val_fraction"},
              "training settings");
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  if (j.contains("optimizer")) {
    s.optimizer = optimizer_kind_from_name(j.at("optimizer").get<std::string>());
  }
  s.seed = j.value("seed", s.seed);
  s.folds = j.value("folds", s.folds);
  s.val_fraction = j.value("val_fraction", s.val_fraction);
}

void to_json(json& j, const SynthSpec& s) {
  j = json{{"num_classes", s.num_classes},
           {"seq_len", s.seq_len},
           {"channels", s.channels},
           {"samples_per_class", s.samples_per_class},
           {"event_centers", s.event_centers},
           {"event_width", s.event_width},
           {"noise", s.noise},
           {"payload", payload_kind_name(s.payload)},
           {"pixels_per_set", s.pixels_per_set},
           {"seed", s.seed}};
}

void from_json(const json& j, SynthSpec& s) {
  expect_keys(j, {"num_classes", "seq_len", "channels", "samples_per_class",
                  "event_centers", "event_width", "noise", "payload", "pixels_per_set",
                  "seed"},
              "synthetic dataset spec");
  s.num_classes = j.value("num_classes", s.num_classes);
  s.seq_len = j.value("seq_len", s.seq_len);
  s.channels = j.value("channels", s.channels);
  s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
  s.event_centers = j.value("event_centers", s.event_centers);
  s.event_width = j.value("event_width", s.event_width);
  s.noise = j.value("noise", s.noise);
  if (j.contains("payload")) {
    s.payload = payload_kind_from_name(j.at("payload").get<std::string>());
  }
  s.pixels_per_set = j.value("pixels_per_set", s.pixels_per_set);
  s.seed = j.value("seed", s.seed);
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::exception& err) {
    throw ConfigError("config file " + path + ": " + err.what());
  }
}

void save_checkpoint(const std::string& path, Classifier& model) {
  json tensors = json::array();
  for (const NamedParam& p : model.parameters()) {
    json entry;
    entry["name"] = p.name;
    entry["shape"] = p.tensor.shape();
    entry["values"] = std::vector<double>(p.tensor.values().begin(), p.tensor.values().end());
    tensors.push_back(std::move(entry));
  }
  json j;
  j["format"] = "ltae-checkpoint";
  j["version"] = 1;
  j["pipeline"] = model.config();
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed while writing " + path);
}

Classifier load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& err) {
    throw DataError("checkpoint " + path + ": " + err.what());
  }
  if (j.value("format", "") != "ltae-checkpoint" || j.value("version", 0) != 1) {
    throw DataError("checkpoint " + path + " has an unsupported format or version");
  }

  PipelineConfig config;
  try {
    from_json(j.at("pipeline"), config);
  } catch (const json::exception& err) {
    throw DataError("checkpoint " + path + ": " + err.what());
  }
  Classifier model(config);

  std::map<std::string, const json*> by_name;
  for (const json& entry : j.at("tensors")) {
    by_name.emplace(entry.at("name").get<std::string>(), &entry);
  }
  std::vector<NamedParam> params = model.parameters();
  if (by_name.size() != params.size()) {
    throw DataError("checkpoint " + path + " holds " + std::to_string(by_name.size()) +
                    " tensors, the model has " + std::to_string(params.size()));
  }
  for (NamedParam& p : params) {
    auto found = by_name.find(p.name);
    if (found == by_name.end()) {
      throw DataError("checkpoint " + path + " is missing tensor " + p.name);
    }
    const json& entry = *found->second;
    const Shape shape = entry.at("shape").get<Shape>();
    if (shape != p.tensor.shape()) {
      throw DataError("checkpoint tensor " + p.name + " has shape " +
                      shape_to_string(shape) + ", expected " +
                      shape_to_string(p.tensor.shape()));
    }
    const auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != p.tensor.size()) {
      throw DataError("checkpoint tensor " + p.name + " has the wrong element count");
    }
    std::copy(values.begin(), values.end(), p.tensor.values_mut().begin());
  }
  return model;
}

}  // namespace ltae

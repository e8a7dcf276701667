#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ltae/complexity.hpp"
#include "ltae/data.hpp"
#include "ltae/errors.hpp"
#include "ltae/serialize.hpp"
#include "ltae/spatial.hpp"
#include "ltae/training.hpp"

namespace {

using namespace ltae;
using nlohmann::json;

// A run config file is a JSON object (comments permitted) with up to two
// sections: "pipeline" and "training". Either may be omitted; fields not
// present keep their defaults. Command-line flags override file values.
void load_run_config(const std::string& path, PipelineConfig& pipeline,
                     TrainSettings& settings) {
  const json j = load_config_file(path);
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "pipeline" && key != "training") {
      throw ConfigError("run config has an unknown key: " + key +
                        " (expected pipeline, training)");
    }
  }
  if (j.contains("pipeline")) from_json(j.at("pipeline"), pipeline);
  if (j.contains("training")) from_json(j.at("training"), settings);
}

std::vector<SequenceSample> load_samples(const std::string& path) {
  return load_dataset(path, &std::cerr);
}

std::vector<SequenceSample> pick(const std::vector<SequenceSample>& all,
                                 const std::vector<std::size_t>& indices) {
  std::vector<SequenceSample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(all[i]);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw DataError("failed while writing " + path);
}

struct SynthArgs {
  std::string spec_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples_per_class;
  std::optional<double> noise;
  std::optional<std::string> payload;
};

void cmd_synth(const SynthArgs& args) {
  SynthSpec spec;
  if (!args.spec_path.empty()) from_json(load_config_file(args.spec_path), spec);
  if (args.seed) spec.seed = *args.seed;
  if (args.samples_per_class) spec.samples_per_class = *args.samples_per_class;
  if (args.noise) spec.noise = *args.noise;
  if (args.payload) spec.payload = payload_kind_from_name(*args.payload);

  const std::vector<SequenceSample> samples = generate_synthetic(spec);
  save_dataset(args.out_path, samples);
  std::cout << "wrote " << samples.size() << " samples (" << spec.num_classes
            << " classes) to " << args.out_path << "\n";
}

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> optimizer;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> folds;
  std::optional<double> val_fraction;
};

void report_fold(std::size_t fold, std::size_t folds, const TrainResult& result) {
  std::printf("fold %zu/%zu: best_epoch=%zu best_val_oa=%.6f\n", fold, folds,
              result.best_epoch, result.best_val_oa);
}

void cmd_train(const TrainArgs& args) {
  PipelineConfig pipeline;
  TrainSettings settings;
  if (!args.config_path.empty()) load_run_config(args.config_path, pipeline, settings);
  if (args.epochs) settings.epochs = *args.epochs;
  if (args.batch_size) settings.batch_size = *args.batch_size;
  if (args.learning_rate) settings.learning_rate = *args.learning_rate;
  if (args.optimizer) settings.optimizer = optimizer_kind_from_name(*args.optimizer);
  if (args.seed) settings.seed = *args.seed;
  if (args.folds) settings.folds = *args.folds;
  if (args.val_fraction) settings.val_fraction = *args.val_fraction;
  pipeline.validate();
  settings.validate();

  const std::vector<SequenceSample> samples = load_samples(args.data_path);
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out_dir(args.out_dir);
  const std::string checkpoint_path = (out_dir / "checkpoint.json").string();

  if (settings.folds <= 1) {
    const auto [train_idx, val_idx] =
        holdout_split(samples.size(), settings.val_fraction, settings.seed);
    Classifier model(pipeline);
    const TrainResult result =
        train(model, pick(samples, train_idx), pick(samples, val_idx), settings);
    const std::string metrics_path = (out_dir / "metrics.csv").string();
    write_file(metrics_path, metrics_csv(result.log));
    save_checkpoint(checkpoint_path, model);
    report_fold(1, 1, result);
    std::cout << "metrics: " << metrics_path << "\n";
    std::cout << "checkpoint: " << checkpoint_path << "\n";
    return;
  }

  const auto folds = kfold_split(samples.size(), settings.folds, settings.seed);
  double best_oa = -1.0;
  double oa_sum = 0.0;
  std::size_t best_fold = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Classifier model(pipeline);
    const TrainResult result =
        train(model, pick(samples, folds[f].first), pick(samples, folds[f].second), settings);
    const std::string metrics_path =
        (out_dir / ("metrics_fold" + std::to_string(f + 1) + ".csv")).string();
    write_file(metrics_path, metrics_csv(result.log));
    report_fold(f + 1, folds.size(), result);
    oa_sum += result.best_val_oa;
    if (result.best_val_oa > best_oa) {
      best_oa = result.best_val_oa;
      best_fold = f + 1;
      save_checkpoint(checkpoint_path, model);
    }
  }
  std::printf("cv_mean_val_oa=%.6f best_fold=%zu\n", oa_sum / static_cast<double>(folds.size()),
              best_fold);
  std::cout << "checkpoint: " << checkpoint_path << "\n";
}

struct EvaluateArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_path;
};

void cmd_evaluate(const EvaluateArgs& args) {
  Classifier model = load_checkpoint(args.checkpoint_path);
  const std::vector<SequenceSample> samples = load_samples(args.data_path);
  const EvalResult result = evaluate(model, samples);

  char line[128];
  std::string text;
  std::snprintf(line, sizeof(line), "oa: %.6f\n", overall_accuracy(result.cm));
  text += line;
  std::snprintf(line, sizeof(line), "miou: %.6f\n", mean_iou(result.cm));
  text += line;
  std::snprintf(line, sizeof(line), "mean_loss: %.6f\n", result.mean_loss);
  text += line;
  text += "confusion:\n";
  text += result.cm.to_text();

  std::cout << text;
  if (!args.out_path.empty()) write_file(args.out_path, text);
}

struct CountArgs {
  std::string config_path;
  std::string preset;
  bool flops = false;
  bool params = false;
};

void cmd_count(const CountArgs& args) {
  TemporalKind kind = TemporalKind::ltae;
  LTAEConfig ltae_cfg;
  TAEConfig tae_cfg;
  if (!args.preset.empty()) {
    const TemporalPreset& preset = find_preset(args.preset);
    kind = preset.kind;
    ltae_cfg = preset.ltae;
    tae_cfg = preset.tae;
  } else if (!args.config_path.empty()) {
    PipelineConfig pipeline;
    TrainSettings ignored;
    load_run_config(args.config_path, pipeline, ignored);
    kind = pipeline.temporal;
    ltae_cfg = pipeline.ltae;
    tae_cfg = pipeline.tae;
  } else {
    throw ConfigError("count needs either --preset or --config");
  }

  if (args.params && !args.flops) {
    const std::uint64_t count =
        kind == TemporalKind::ltae ? count_params(ltae_cfg) : count_params(tae_cfg);
    std::printf("param_count: %llu\n", static_cast<unsigned long long>(count));
    return;
  }
  const CostReport report =
      kind == TemporalKind::ltae ? count_flops(ltae_cfg) : count_flops(tae_cfg);
  std::cout << report.to_text();
}

struct InspectArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_path;
};

void cmd_inspect_attention(const InspectArgs& args) {
  Classifier model = load_checkpoint(args.checkpoint_path);
  const std::vector<SequenceSample> samples = load_samples(args.data_path);
  if (samples.empty()) throw DataError("cannot inspect attention on an empty dataset");

  const std::size_t num_classes = model.config().num_classes;
  std::vector<std::vector<double>> sums(num_classes);
  std::vector<std::size_t> counts(num_classes, 0);
  std::size_t heads = 0;
  std::size_t steps = 0;
  for (const SequenceSample& sample : samples) {
    const ClassifierOutput out = model.forward(sample);
    const Tensor& masks = out.attention.masks;
    heads = masks.extent(0);
    steps = masks.extent(1);
    auto& sum = sums.at(sample.label);
    if (sum.empty()) sum.assign(heads * steps, 0.0);
    auto values = masks.values();
    for (std::size_t i = 0; i < values.size(); ++i) sum[i] += values[i];
    ++counts[sample.label];
  }

  std::string csv = "class,head";
  for (std::size_t t = 0; t < steps; ++t) csv += ",t" + std::to_string(t);
  csv += "\n";
  char cell[64];
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t h = 0; h < heads; ++h) {
      csv += std::to_string(c) + "," + std::to_string(h);
      for (std::size_t t = 0; t < steps; ++t) {
        const double mean = sums[c][h * steps + t] / static_cast<double>(counts[c]);
        std::snprintf(cell, sizeof(cell), ",%.17g", mean);
        csv += cell;
      }
      csv += "\n";
    }
  }
  write_file(args.out_path, csv);
  std::cout << "wrote per-class attention averages (" << heads << " heads x " << steps
            << " steps) to " << args.out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal attention encoder toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--spec", synth.spec_path, "Synthetic spec JSON file");
  synth_cmd->add_option("--out", synth.out_path, "Output dataset path")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the spec seed");
  synth_cmd->add_option("--samples-per-class", synth.samples_per_class,
                        "Override samples per class");
  synth_cmd->add_option("--noise", synth.noise, "Override the noise level");
  synth_cmd->add_option("--payload", synth.payload,
                        "Override the payload kind (embeddings|pixel_sets)");
  synth_cmd->callback([&] { cmd_synth(synth); });

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a classifier");
  train_cmd->add_option("--config", train_args.config_path,
                        "Run config JSON file (pipeline + training sections)");
  train_cmd->add_option("--data", train_args.data_path, "Training dataset")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--epochs", train_args.epochs, "Override epoch count");
  train_cmd->add_option("--batch-size", train_args.batch_size, "Override batch size");
  train_cmd->add_option("--lr", train_args.learning_rate, "Override learning rate");
  train_cmd->add_option("--optimizer", train_args.optimizer, "Override optimizer (sgd|adam)");
  train_cmd->add_option("--seed", train_args.seed, "Override training seed");
  train_cmd->add_option("--folds", train_args.folds,
                        "Cross-validation fold count (1 = single holdout)");
  train_cmd->add_option("--val-fraction", train_args.val_fraction,
                        "Holdout validation share when folds is 1");
  train_cmd->callback([&] { cmd_train(train_args); });

  EvaluateArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--data", eval_args.data_path, "Evaluation dataset")->required();
  eval_cmd->add_option("--out", eval_args.out_path, "Also write the report to this file");
  eval_cmd->callback([&] { cmd_evaluate(eval_args); });

  CountArgs count_args;
  CLI::App* count_cmd =
      app.add_subcommand("count", "Report parameter and FLOP costs of the temporal module");
  count_cmd->add_option("--config", count_args.config_path,
                        "Run config JSON file naming the temporal module");
  count_cmd->add_option("--preset", count_args.preset,
                        "Named preset (ltae-1..6, ltae-default, tae-1..7)");
  count_cmd->add_flag("--flops", count_args.flops, "Print the full FLOP report");
  count_cmd->add_flag("--params", count_args.params, "Print only the parameter count");
  count_cmd->callback([&] { cmd_count(count_args); });

  InspectArgs inspect_args;
  CLI::App* inspect_cmd = app.add_subcommand(
      "inspect-attention", "Emit per-class per-head average attention masks as CSV");
  inspect_cmd->add_option("--checkpoint", inspect_args.checkpoint_path, "Checkpoint file")
      ->required();
  inspect_cmd->add_option("--data", inspect_args.data_path, "Dataset to average over")
      ->required();
  inspect_cmd->add_option("--out", inspect_args.out_path, "Output CSV path")->required();
  inspect_cmd->callback([&] { cmd_inspect_attention(inspect_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    std::cerr << "error: config: " << err.what() << "\n";
    return 2;
  } catch (const ConfigError& err) {
    std::cerr << "error: config: " << err.what() << "\n";
    return 2;
  } catch (const ContractError& err) {
    std::cerr << "error: config: " << err.what() << "\n";
    return 2;
  } catch (const DimensionError& err) {
    std::cerr << "error: config: " << err.what() << "\n";
    return 2;
  } catch (const DataError& err) {
    std::cerr << "error: data: " << err.what() << "\n";
    return 3;
  } catch (const NumericError& err) {
    std::cerr << "error: numeric: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << err.what() << "\n";
    return 1;
  }
  return 0;
}

#include "ltae/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "ltae/ops.hpp"

namespace ltae {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : classes_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ContractError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) {
    throw ContractError("class index out of range: " + std::to_string(truth) + "/" +
                        std::to_string(predicted) + " with " + std::to_string(classes_) +
                        " classes");
  }
  ++counts_[truth * classes_ + predicted];
  ++total_;
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_[truth * classes_ + predicted];
}

std::string ConfusionMatrix::to_text() const {
  std::ostringstream out;
  out << "true\\pred";
  for (std::size_t c = 0; c < classes_; ++c) out << '\t' << c;
  out << '\n';
  for (std::size_t r = 0; r < classes_; ++r) {
    out << r;
    for (std::size_t c = 0; c < classes_; ++c) out << '\t' << at(r, c);
    out << '\n';
  }
  return out.str();
}

double overall_accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ContractError("accuracy is undefined on an empty matrix");
  std::uint64_t hits = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) hits += cm.at(c, c);
  return static_cast<double>(hits) / static_cast<double>(cm.total());
}

double mean_iou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t other = 0; other < cm.num_classes(); ++other) {
      row += cm.at(c, other);
      col += cm.at(other, c);
    }
    const std::uint64_t uni = row + col - cm.at(c, c);
    if (uni == 0) continue;  // class absent from truth and prediction alike
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(uni);
    ++counted;
  }
  if (counted == 0) throw ContractError("mean IoU is undefined on an empty matrix");
  return sum / static_cast<double>(counted);
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) {
    throw DimensionError("cross entropy expects a logit vector, got " +
                         shape_to_string(logits.shape()));
  }
  if (label >= logits.extent(0)) {
    throw ContractError("label " + std::to_string(label) + " out of range for " +
                        std::to_string(logits.extent(0)) + " classes");
  }
  return sub(logsumexp(logits), slice(logits, 0, label, 1));
}

std::string optimizer_kind_name(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer: " + name);
}

namespace {

class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(double learning_rate) : lr_(learning_rate) {}

  void step(std::vector<NamedParam>& params) override {
    for (NamedParam& p : params) {
      auto values = p.tensor.values_mut();
      auto grad = p.tensor.grad();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr_ * grad[i];
    }
  }

 private:
  double lr_;
};

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(double learning_rate) : lr_(learning_rate) {}

  void step(std::vector<NamedParam>& params) override {
    if (m_.empty()) {
      for (const NamedParam& p : params) {
        m_.emplace_back(p.tensor.size(), 0.0);
        v_.emplace_back(p.tensor.size(), 0.0);
      }
    }
    if (m_.size() != params.size()) {
      throw ContractError("optimizer state does not match the parameter list");
    }
    ++step_count_;
    const double m_correction = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double v_correction = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto values = params[p].tensor.values_mut();
      auto grad = params[p].tensor.grad();
      std::vector<double>& m = m_[p];
      std::vector<double>& v = v_[p];
      for (std::size_t i = 0; i < values.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = m[i] / m_correction;
        const double v_hat = v[i] / v_correction;
        values[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
      }
    }
  }

 private:
  static constexpr double beta1_ = 0.9;
  static constexpr double beta2_ = 0.999;
  static constexpr double epsilon_ = 1e-8;
  double lr_;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

std::size_t argmax_values(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

std::string format_row(const EpochRow& row) {
  char buffer[128];
  std::snprintf(buffer, sizeof(buffer), "%zu,%s,%.6f,%.6f,%.6f", row.epoch,
                row.split.c_str(), row.loss, row.oa, row.miou);
  return buffer;
}

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (kind == OptimizerKind::adam) return std::make_unique<AdamOptimizer>(learning_rate);
  return std::make_unique<SgdOptimizer>(learning_rate);
}

void TrainSettings::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (folds == 0) throw ConfigError("folds must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
}

std::string metrics_csv(const std::vector<EpochRow>& log) {
  std::string out = "epoch,split,loss,oa,miou\n";
  for (const EpochRow& row : log) {
    out += format_row(row);
    out += '\n';
  }
  return out;
}

EvalResult evaluate(const Classifier& model, const std::vector<SequenceSample>& samples) {
  if (samples.empty()) throw DataError("cannot evaluate an empty dataset");
  EvalResult result{ConfusionMatrix(model.config().num_classes), 0.0};
  for (const SequenceSample& sample : samples) {
    Tensor logits = model.logits(sample);
    result.cm.add(sample.label, argmax_values(logits.values()));
    result.mean_loss += cross_entropy(logits, sample.label).value();
  }
  result.mean_loss /= static_cast<double>(samples.size());
  return result;
}

TrainResult train(Classifier& model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& val_set,
                  const TrainSettings& settings) {
  settings.validate();
  if (train_set.empty()) throw DataError("cannot train on an empty dataset");

  std::vector<NamedParam> params = model.parameters();
  std::unique_ptr<Optimizer> optimizer =
      make_optimizer(settings.optimizer, settings.learning_rate);
  std::mt19937_64 rng(settings.seed);

  auto snapshot_values = [&]() {
    std::vector<std::vector<double>> copy;
    copy.reserve(params.size());
    for (const NamedParam& p : params) {
      auto values = p.tensor.values();
      copy.emplace_back(values.begin(), values.end());
    }
    return copy;
  };

  TrainResult result;
  std::vector<std::vector<double>> best = snapshot_values();
  double best_metric = -1.0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    ConfusionMatrix running_cm(model.config().num_classes);
    double running_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
      const std::size_t stop = std::min(order.size(), start + settings.batch_size);
      for (NamedParam& p : params) p.tensor.zero_grad();

      Tape tape;
      std::vector<Tensor> losses;
      losses.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const SequenceSample& sample = train_set[order[i]];
        Tensor logits = model.logits(sample);
        running_cm.add(sample.label, argmax_values(logits.values()));
        losses.push_back(cross_entropy(logits, sample.label));
      }
      Tensor batch_loss = mean(concat(losses, 0));
      if (!std::isfinite(batch_loss.value())) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(start / settings.batch_size));
      }
      running_loss += batch_loss.value() * static_cast<double>(stop - start);
      tape.backward(batch_loss);
      optimizer->step(params);
    }

    EpochRow train_row{epoch, "train", running_loss / static_cast<double>(order.size()),
                       overall_accuracy(running_cm), mean_iou(running_cm)};
    result.log.push_back(train_row);

    double selection_metric = train_row.oa;
    if (!val_set.empty()) {
      EvalResult val = evaluate(model, val_set);
      EpochRow val_row{epoch, "val", val.mean_loss, overall_accuracy(val.cm),
                       mean_iou(val.cm)};
      result.log.push_back(val_row);
      selection_metric = val_row.oa;
    }
    if (selection_metric > best_metric) {
      best_metric = selection_metric;
      best = snapshot_values();
      result.best_epoch = epoch;
    }
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].tensor.values_mut();
    std::copy(best[p].begin(), best[p].end(), values.begin());
  }
  result.best_val_oa = best_metric;
  return result;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t count, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least two folds");
  if (k > count) {
    throw ConfigError("cannot split " + std::to_string(count) + " samples into " +
                      std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
  folds.reserve(k);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = count / k + (f < count % k ? 1 : 0);
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split;
    split.second.assign(order.begin() + cursor, order.begin() + cursor + size);
    split.first.assign(order.begin(), order.begin() + cursor);
    split.first.insert(split.first.end(), order.begin() + cursor + size, order.end());
    folds.push_back(std::move(split));
    cursor += size;
  }
  return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::size_t count, double fraction, std::uint64_t seed) {
  if (count == 0) throw DataError("cannot split an empty dataset");
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t val = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(count)));
  if (val >= count) val = count - 1;
  return {{order.begin() + static_cast<std::ptrdiff_t>(val), order.end()},
          {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val)}};
}

}  // namespace ltae

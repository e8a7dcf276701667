#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ltae/data.hpp"
#include "ltae/nn.hpp"
#include "ltae/spatial.hpp"
#include "ltae/tensor.hpp"

namespace ltae {

// Rows are true classes, columns are predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted);
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  std::size_t num_classes() const { return classes_; }
  std::uint64_t total() const { return total_; }
  std::string to_text() const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Fraction of correctly classified samples.
double overall_accuracy(const ConfusionMatrix& cm);

// Per-class intersection-over-union averaged over the classes; classes absent
// from both truth and prediction are skipped. Throws when every class is.
double mean_iou(const ConfusionMatrix& cm);

// -log softmax(logits)[label], computed via a stabilized log-sum-exp.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

enum class OptimizerKind { sgd, adam };

std::string optimizer_kind_name(OptimizerKind kind);
OptimizerKind optimizer_kind_from_name(const std::string& name);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Applies one update from the gradients currently held by the parameters.
  virtual void step(std::vector<NamedParam>& params) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate);

struct TrainSettings {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 1;
  std::size_t folds = 1;      // > 1 selects cross-validation in the cli
  double val_fraction = 0.2;  // holdout share when folds == 1

  void validate() const;
};

struct EpochRow {
  std::size_t epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  double oa = 0.0;
  double miou = 0.0;
};

// Header plus one row per entry: epoch,split,loss,oa,miou
std::string metrics_csv(const std::vector<EpochRow>& log);

struct TrainResult {
  std::vector<EpochRow> log;
  std::size_t best_epoch = 0;  // 1-based; epoch whose weights were kept
  double best_val_oa = 0.0;
};

struct EvalResult {
  ConfusionMatrix cm;
  double mean_loss = 0.0;
};

EvalResult evaluate(const Classifier& model, const std::vector<SequenceSample>& samples);

// Mini-batch training with the mean batch loss. Deterministic given the
// settings seed. The "train" log rows carry running statistics gathered
// while the weights move; "val" rows come from a clean pass after each
// epoch. The weights of the epoch with the best validation accuracy (best
// training accuracy when `val_set` is empty) are restored before returning.
// A non-finite batch loss aborts with NumericError naming epoch and batch.
TrainResult train(Classifier& model, const std::vector<SequenceSample>& train_set,
                  const std::vector<SequenceSample>& val_set, const TrainSettings& settings);

// Shuffled disjoint partitions covering 0..count-1 with sizes differing by
// at most one; the first count % k folds take the extra element.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t count, std::size_t k, std::uint64_t seed);

// Single shuffled holdout split with round(fraction * count) validation
// samples (at least one training sample remains).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(
    std::size_t count, double fraction, std::uint64_t seed);

}  // namespace ltae

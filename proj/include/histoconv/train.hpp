#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histoconv/augment.hpp"
#include "histoconv/dataset.hpp"
#include "histoconv/metrics.hpp"
#include "histoconv/model.hpp"
#include "histoconv/optim.hpp"

namespace histoconv {

// Full description of one training run. When `decay` is left unset it
// defaults to lr/epochs; `validation` chooses between carving
// validation_fraction of the training patients out ("holdout") or scoring the
// test side each epoch ("test").
struct TrainConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  AugmentConfig augment;
  bool augment_enabled = true;
  std::size_t epochs = 100;
  std::size_t batch_size = 55;
  std::optional<double> decay;
  std::uint64_t seed = 0;
  std::string validation = "holdout";
  double validation_fraction = 0.1;

  double effective_decay() const {
    return decay ? *decay : optimizer.lr / static_cast<double>(epochs);
  }

  void validate() const;
};

// Strict parsers: unknown keys are config errors, absent keys take defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

// Images preloaded at model input size, labels as five-class indices.
struct LoadedSet {
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
};

LoadedSet load_records(const DatasetIndex& index, const std::vector<std::size_t>& record_indices,
                       std::size_t target_h, std::size_t target_w);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

// Returning false stops training after the current epoch (early stop).
using EpochCallback = std::function<bool(const EpochStats&)>;

// One full training run: per epoch, shuffle by a seed derived from
// (run seed, epoch), augment each training image (train side only), batch at
// cfg.batch_size with the final short batch trained, average gradients over
// the batch, one optimizer step per batch at the epoch's decayed rate, then
// score the validation set in eval mode. Training loss/accuracy come from the
// training passes themselves. A non-finite batch loss aborts with a numeric
// error naming the epoch, batch and learning rate.
std::vector<EpochStats> train(Model<float>& model, const LoadedSet& train_set,
                              const LoadedSet& val_set, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::size_t> predictions;
};

// Eval-mode scoring; prediction is the argmax of the softmax row with ties
// going to the lowest class index. Empty sets are an error.
EvalResult evaluate_set(Model<float>& model, const LoadedSet& set);

MetricsReport evaluate_report(Model<float>& model, const LoadedSet& set,
                              const std::vector<std::string>& class_names);

struct SweepCell {
  OptimizerKind optimizer = OptimizerKind::sgd;
  double lr = 0.0;
  double test_accuracy = 0.0;
};

using SweepCallback = std::function<void(const SweepCell&)>;

// Trains one model per (optimizer, lr) grid cell, every cell starting from
// the same seed and therefore identical initial parameters, and records the
// final test-side accuracy.
std::vector<SweepCell> sweep(const LoadedSet& train_set, const LoadedSet& test_set,
                             const TrainConfig& base, const std::vector<OptimizerKind>& optimizers,
                             const std::vector<double>& lrs, const SweepCallback& on_cell = {});

// CSV emission in the documented layouts.
std::string curves_to_csv(const std::vector<EpochStats>& curve);
std::string sweep_to_csv(const std::vector<SweepCell>& cells);

}  // namespace histoconv

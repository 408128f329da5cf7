#include "histoconv/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "histoconv/jsonutil.hpp"
#include "histoconv/parallel.hpp"

namespace histoconv {

using nlohmann::json;

namespace {

// Salts for the independent deterministic streams hanging off the run seed.
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  optimizer.validate();
  augment.validate();
  if (epochs < 1) fail(ErrorCode::config, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::config, "batch_size must be >= 1");
  if (decay && *decay < 0.0)
    fail(ErrorCode::config, "decay must be >= 0, got " + std::to_string(*decay));
  if (validation != "holdout" && validation != "test")
    fail(ErrorCode::config, "validation must be 'holdout' or 'test', got '" + validation + "'");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    fail(ErrorCode::config,
         "validation_fraction must be in (0, 1), got " + std::to_string(validation_fraction));
}

OptimizerConfig optimizer_config_from_json(const json& j) {
  require_known_keys(j, {"kind", "lr", "beta1", "beta2", "epsilon", "rho",
                         "nadam_denominator", "nadam_corrected_v"},
                     "optimizer config");
  OptimizerConfig cfg;
  cfg.kind = optimizer_kind_from_string(
      json_get<std::string>(j, "kind", "adam", "optimizer config"));
  cfg.lr = json_get<double>(j, "lr", cfg.lr, "optimizer config");
  cfg.beta1 = json_get<double>(j, "beta1", cfg.beta1, "optimizer config");
  cfg.beta2 = json_get<double>(j, "beta2", cfg.beta2, "optimizer config");
  cfg.epsilon = json_get<double>(j, "epsilon", cfg.epsilon, "optimizer config");
  cfg.rho = json_get<double>(j, "rho", cfg.rho, "optimizer config");
  const std::string denom =
      json_get<std::string>(j, "nadam_denominator", "per_step", "optimizer config");
  if (denom == "per_step")
    cfg.nadam_denominator = NadamDenominator::per_step;
  else if (denom == "literal")
    cfg.nadam_denominator = NadamDenominator::literal;
  else
    fail(ErrorCode::config,
         "nadam_denominator must be 'per_step' or 'literal', got '" + denom + "'");
  cfg.nadam_corrected_v = json_get<bool>(j, "nadam_corrected_v", false, "optimizer config");
  cfg.validate();
  return cfg;
}

namespace {

AugmentConfig augment_config_from_json(const json& j, bool& enabled) {
  require_known_keys(j, {"enabled", "zoom_range", "shear_range", "rotation_range",
                         "width_shift_range", "height_shift_range", "horizontal_flip"},
                     "augment config");
  AugmentConfig cfg;
  enabled = json_get<bool>(j, "enabled", true, "augment config");
  cfg.zoom_range = json_get<double>(j, "zoom_range", cfg.zoom_range, "augment config");
  cfg.shear_range = json_get<double>(j, "shear_range", cfg.shear_range, "augment config");
  cfg.rotation_range = json_get<double>(j, "rotation_range", cfg.rotation_range, "augment config");
  cfg.width_shift_range =
      json_get<double>(j, "width_shift_range", cfg.width_shift_range, "augment config");
  cfg.height_shift_range =
      json_get<double>(j, "height_shift_range", cfg.height_shift_range, "augment config");
  cfg.horizontal_flip = json_get<bool>(j, "horizontal_flip", cfg.horizontal_flip, "augment config");
  cfg.validate();
  return cfg;
}

ModelConfig model_config_from_run_json(const json& j) {
  require_known_keys(j, {"input_h", "input_w", "channels", "conv_filters", "kernel",
                         "dense_units", "dropout", "classes"},
                     "model config");
  ModelConfig cfg;
  cfg.input_h = json_get<std::size_t>(j, "input_h", cfg.input_h, "model config");
  cfg.input_w = json_get<std::size_t>(j, "input_w", cfg.input_w, "model config");
  cfg.channels = json_get<std::size_t>(j, "channels", cfg.channels, "model config");
  cfg.conv_filters =
      json_get<std::vector<std::size_t>>(j, "conv_filters", cfg.conv_filters, "model config");
  cfg.kernel = json_get<std::size_t>(j, "kernel", cfg.kernel, "model config");
  cfg.dense_units = json_get<std::size_t>(j, "dense_units", cfg.dense_units, "model config");
  cfg.dropout = json_get<double>(j, "dropout", cfg.dropout, "model config");
  cfg.classes = json_get<std::size_t>(j, "classes", cfg.classes, "model config");
  cfg.validate();
  return cfg;
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  require_known_keys(j, {"model", "optimizer", "augment", "epochs", "batch_size", "decay",
                         "seed", "validation", "validation_fraction"},
                     "train config");
  TrainConfig cfg;
  if (j.contains("model")) cfg.model = model_config_from_run_json(j.at("model"));
  if (j.contains("optimizer")) cfg.optimizer = optimizer_config_from_json(j.at("optimizer"));
  if (j.contains("augment"))
    cfg.augment = augment_config_from_json(j.at("augment"), cfg.augment_enabled);
  cfg.epochs = json_get<std::size_t>(j, "epochs", cfg.epochs, "train config");
  cfg.batch_size = json_get<std::size_t>(j, "batch_size", cfg.batch_size, "train config");
  if (j.contains("decay") && !j.at("decay").is_null())
    cfg.decay = json_get<double>(j, "decay", 0.0, "train config");
  cfg.seed = json_get<std::uint64_t>(j, "seed", cfg.seed, "train config");
  cfg.validation = json_get<std::string>(j, "validation", cfg.validation, "train config");
  cfg.validation_fraction =
      json_get<double>(j, "validation_fraction", cfg.validation_fraction, "train config");
  cfg.validate();
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  json opt = {{"kind", optimizer_kind_name(cfg.optimizer.kind)},
              {"lr", cfg.optimizer.lr},
              {"beta1", cfg.optimizer.beta1},
              {"beta2", cfg.optimizer.beta2},
              {"epsilon", cfg.optimizer.epsilon},
              {"rho", cfg.optimizer.rho},
              {"nadam_denominator", cfg.optimizer.nadam_denominator == NadamDenominator::per_step
                                        ? "per_step"
                                        : "literal"},
              {"nadam_corrected_v", cfg.optimizer.nadam_corrected_v}};
  json aug = {{"enabled", cfg.augment_enabled},
              {"zoom_range", cfg.augment.zoom_range},
              {"shear_range", cfg.augment.shear_range},
              {"rotation_range", cfg.augment.rotation_range},
              {"width_shift_range", cfg.augment.width_shift_range},
              {"height_shift_range", cfg.augment.height_shift_range},
              {"horizontal_flip", cfg.augment.horizontal_flip}};
  json model = {{"input_h", cfg.model.input_h},
                {"input_w", cfg.model.input_w},
                {"channels", cfg.model.channels},
                {"conv_filters", cfg.model.conv_filters},
                {"kernel", cfg.model.kernel},
                {"dense_units", cfg.model.dense_units},
                {"dropout", cfg.model.dropout},
                {"classes", cfg.model.classes}};
  json j;
  j["model"] = model;
  j["optimizer"] = opt;
  j["augment"] = aug;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["decay"] = cfg.effective_decay();
  j["seed"] = cfg.seed;
  j["validation"] = cfg.validation;
  j["validation_fraction"] = cfg.validation_fraction;
  return j;
}

LoadedSet load_records(const DatasetIndex& index, const std::vector<std::size_t>& record_indices,
                       std::size_t target_h, std::size_t target_w) {
  LoadedSet set;
  set.images.resize(record_indices.size());
  set.labels.resize(record_indices.size());
  std::string first_error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (std::size_t i = 0; i < record_indices.size(); ++i) {
    try {
      const SampleRecord& rec = index.records.at(record_indices[i]);
      set.images[i] = load_image(rec, target_h, target_w);
      set.labels[i] = rec.five_class;
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) fail(ErrorCode::data, first_error);
  return set;
}

namespace {

Tensor onehot_row(std::size_t label, std::size_t classes) {
  Tensor y({1, classes});
  y.at(std::size_t(0), label) = 1.0f;
  return y;
}

std::size_t argmax_row(const Tensor& probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[best]) best = j;
  return best;
}

}  // namespace

std::vector<EpochStats> train(Model<float>& model, const LoadedSet& train_set,
                              const LoadedSet& val_set, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.images.empty()) fail(ErrorCode::data, "training set is empty");
  if (val_set.images.empty()) fail(ErrorCode::data, "validation set is empty");
  const std::size_t n = train_set.images.size();
  const std::size_t classes = model.config().classes;
  for (std::size_t lab : train_set.labels)
    if (lab >= classes)
      fail(ErrorCode::data, "label " + std::to_string(lab) + " out of range for " +
                                std::to_string(classes) + " classes");

  Optimizer<float> opt(cfg.optimizer, model.params());
  const double decay = cfg.effective_decay();

  std::vector<EpochStats> curve;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = apply_decay(cfg.optimizer.lr, decay, epoch);

    Rng shuffle_rng(Rng::derive(cfg.seed, kShuffleStream, epoch));
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t batch_n = std::min(cfg.batch_size, n - start);
      const float scale = 1.0f / static_cast<float>(batch_n);
      model.zero_grads();

      double batch_loss = 0.0;
      for (std::size_t b = 0; b < batch_n; ++b) {
        const std::size_t pos = start + b;
        const std::size_t sample = order[pos];
        Tensor img = train_set.images[sample];
        if (cfg.augment_enabled && !cfg.augment.is_identity()) {
          Rng aug_rng(Rng::derive(cfg.seed, kAugmentStream, epoch * n + pos));
          img = augment_image(img, cfg.augment, aug_rng);
        }
        Rng drop_rng(Rng::derive(cfg.seed, kDropoutStream, epoch * n + pos));
        Tensor probs = model.forward(img, Mode::train, drop_rng);
        const Tensor y = onehot_row(train_set.labels[sample], classes);
        batch_loss += cross_entropy_loss(probs, y);
        if (argmax_row(probs) == train_set.labels[sample]) ++correct;
        model.backward_fused(probs, y, scale);
      }
      batch_loss /= static_cast<double>(batch_n);
      if (!std::isfinite(batch_loss))
        fail(ErrorCode::numeric, "non-finite loss in epoch " + std::to_string(epoch + 1) +
                                     ", batch " + std::to_string(start / cfg.batch_size + 1) +
                                     " at learning rate " + std::to_string(lr));
      opt.step(model.params(), model.grads(), lr);
      loss_sum += batch_loss * static_cast<double>(batch_n);
    }

    const EvalResult val = evaluate_set(model, val_set);
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    stats.val_loss = val.loss;
    stats.val_acc = val.accuracy;
    stats.lr = lr;
    curve.push_back(stats);
    if (on_epoch && !on_epoch(stats)) break;
  }
  return curve;
}

EvalResult evaluate_set(Model<float>& model, const LoadedSet& set) {
  if (set.images.empty()) fail(ErrorCode::data, "cannot evaluate an empty record set");
  const std::size_t n = set.images.size();
  EvalResult out;
  out.predictions.resize(n);
  std::vector<double> losses(n);
  std::string first_error;

  // Eval-mode forward caches nothing, so samples are independent; per-sample
  // results land in preassigned slots and the final sums are sequential, so
  // the result does not depend on the worker count.
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (std::size_t i = 0; i < n; ++i) {
    try {
      Rng unused(0);
      const Tensor probs = model.forward(set.images[i], Mode::eval, unused);
      const Tensor y = onehot_row(set.labels[i], model.config().classes);
      losses[i] = cross_entropy_loss(probs, y);
      out.predictions[i] = argmax_row(probs);
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) fail(ErrorCode::internal, first_error);

  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loss_sum += losses[i];
    if (out.predictions[i] == set.labels[i]) ++correct;
  }
  out.loss = loss_sum / static_cast<double>(n);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return out;
}

MetricsReport evaluate_report(Model<float>& model, const LoadedSet& set,
                              const std::vector<std::string>& class_names) {
  const EvalResult eval = evaluate_set(model, set);
  const auto confusion =
      confusion_from_predictions(set.labels, eval.predictions, class_names.size());
  return compute_metrics(confusion, class_names);
}

std::vector<SweepCell> sweep(const LoadedSet& train_set, const LoadedSet& test_set,
                             const TrainConfig& base, const std::vector<OptimizerKind>& optimizers,
                             const std::vector<double>& lrs, const SweepCallback& on_cell) {
  if (optimizers.empty() || lrs.empty())
    fail(ErrorCode::config, "sweep needs at least one optimizer and one learning rate");
  std::vector<SweepCell> cells;
  for (OptimizerKind kind : optimizers) {
    for (double lr : lrs) {
      TrainConfig cfg = base;
      cfg.optimizer.kind = kind;
      cfg.optimizer.lr = lr;
      cfg.validate();
      Rng init_rng(Rng::derive(cfg.seed, 0, 0));
      Model<float> model(cfg.model, init_rng);
      train(model, train_set, test_set, cfg);
      SweepCell cell;
      cell.optimizer = kind;
      cell.lr = lr;
      cell.test_accuracy = evaluate_set(model, test_set).accuracy;
      cells.push_back(cell);
      if (on_cell) on_cell(cell);
    }
  }
  return cells;
}

std::string curves_to_csv(const std::vector<EpochStats>& curve) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  char line[256];
  for (const auto& s : curve) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.epoch, s.train_loss,
                  s.train_acc, s.val_loss, s.val_acc, s.lr);
    out << line;
  }
  return out.str();
}

std::string sweep_to_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "optimizer,learning_rate,test_accuracy\n";
  char line[128];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof(line), "%s,%.9g,%.9g\n", optimizer_kind_name(c.optimizer), c.lr,
                  c.test_accuracy);
    out << line;
  }
  return out.str();
}

}  // namespace histoconv

#include "histoconv.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "histoconv/checkpoint.hpp"
#include "histoconv/commands.hpp"
#include "histoconv/image_io.hpp"
#include "histoconv/jsonutil.hpp"
#include "histoconv/version.hpp"

namespace {

thread_local std::string g_last_error;

template <typename F>
hc_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return HC_OK;
  } catch (const histoconv::Error& e) {
    g_last_error = e.what();
    return static_cast<hc_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HC_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HC_ERROR_INTERNAL;
  }
}

hc_status arg_error(const char* what) {
  g_last_error = what;
  return HC_ERROR_CONFIG;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit_report(char** slot, const std::string& text) {
  if (slot) *slot = dup_string(text);
}

std::vector<double> parse_lr_csv(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      histoconv::fail(histoconv::ErrorCode::config, "bad learning rate '" + item + "'");
    }
  }
  if (out.empty()) histoconv::fail(histoconv::ErrorCode::config, "no learning rates given");
  return out;
}

std::vector<histoconv::OptimizerKind> parse_optimizer_csv(const std::string& csv) {
  std::vector<histoconv::OptimizerKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(histoconv::optimizer_kind_from_string(item));
  }
  if (out.empty()) histoconv::fail(histoconv::ErrorCode::config, "no optimizers given");
  return out;
}

}  // namespace

struct hc_index {
  histoconv::DatasetIndex index;
};

struct hc_split {
  histoconv::SplitSpec split;
};

struct hc_model {
  histoconv::LoadedCheckpoint ckpt;
};

extern "C" {

const char* hc_last_error(void) { return g_last_error.c_str(); }

const char* hc_version(void) { return HISTOCONV_VERSION; }

void hc_string_free(char* s) { std::free(s); }

hc_status hc_index_build(const char* root, hc_index** out) {
  if (!root || !out) return arg_error("hc_index_build: null argument");
  return guarded([&] {
    auto build = histoconv::build_index(root);
    *out = new hc_index{std::move(build.index)};
  });
}

hc_status hc_index_load(const char* path, hc_index** out) {
  if (!path || !out) return arg_error("hc_index_load: null argument");
  return guarded([&] {
    *out = new hc_index{histoconv::index_from_json_text(histoconv::read_text_file(path))};
  });
}

hc_status hc_index_save(const hc_index* index, const char* path) {
  if (!index || !path) return arg_error("hc_index_save: null argument");
  return guarded([&] {
    histoconv::write_text_file(path, histoconv::index_to_json_text(index->index));
  });
}

size_t hc_index_size(const hc_index* index) { return index ? index->index.records.size() : 0; }

size_t hc_index_patient_count(const hc_index* index) {
  return index ? index->index.patients.size() : 0;
}

hc_status hc_index_summary(const hc_index* index, char** text) {
  if (!index || !text) return arg_error("hc_index_summary: null argument");
  return guarded([&] { *text = dup_string(histoconv::summary_table(index->index)); });
}

void hc_index_free(hc_index* index) { delete index; }

hc_status hc_split_create(const hc_index* index, double train_fraction, uint64_t seed,
                          hc_split** out) {
  if (!index || !out) return arg_error("hc_split_create: null argument");
  return guarded([&] {
    *out = new hc_split{histoconv::patient_exclusive_split(index->index, train_fraction, seed)};
  });
}

hc_status hc_split_load(const char* path, hc_split** out) {
  if (!path || !out) return arg_error("hc_split_load: null argument");
  return guarded([&] {
    *out = new hc_split{histoconv::split_from_json_text(histoconv::read_text_file(path))};
  });
}

hc_status hc_split_save(const hc_split* split, const char* path) {
  if (!split || !path) return arg_error("hc_split_save: null argument");
  return guarded([&] {
    histoconv::write_text_file(path, histoconv::split_to_json_text(split->split));
  });
}

hc_status hc_split_validate(const hc_index* index, const hc_split* split) {
  if (!index || !split) return arg_error("hc_split_validate: null argument");
  return guarded([&] { histoconv::validate_split(index->index, split->split); });
}

size_t hc_split_train_patient_count(const hc_split* split) {
  return split ? split->split.train_patients.size() : 0;
}

size_t hc_split_test_patient_count(const hc_split* split) {
  return split ? split->split.test_patients.size() : 0;
}

void hc_split_free(hc_split* split) { delete split; }

hc_status hc_model_load(const char* checkpoint_path, hc_model** out) {
  if (!checkpoint_path || !out) return arg_error("hc_model_load: null argument");
  return guarded([&] { *out = new hc_model{histoconv::load_checkpoint(checkpoint_path)}; });
}

size_t hc_model_classes(const hc_model* model) {
  return model ? model->ckpt.model.config().classes : 0;
}

hc_status hc_model_predict_png(hc_model* model, const char* png_path, size_t* class_index,
                               double* probs, size_t probs_len) {
  if (!model || !png_path || !class_index)
    return arg_error("hc_model_predict_png: null argument");
  return guarded([&] {
    const auto& cfg = model->ckpt.model.config();
    histoconv::Tensor img = histoconv::read_png(png_path);
    if (img.extent(0) != cfg.input_h || img.extent(1) != cfg.input_w)
      img = histoconv::resize_bilinear(img, cfg.input_h, cfg.input_w);
    histoconv::Rng unused(0);
    const histoconv::Tensor out = model->ckpt.model.forward(img, histoconv::Mode::eval, unused);
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (out[j] > out[best]) best = j;
    *class_index = best;
    if (probs)
      for (std::size_t j = 0; j < probs_len && j < out.size(); ++j)
        probs[j] = static_cast<double>(out[j]);
  });
}

void hc_model_free(hc_model* model) { delete model; }

hc_status hc_cmd_ingest(const char* root, const char* out_index_path, char** report_text) {
  if (!root || !out_index_path) return arg_error("hc_cmd_ingest: null argument");
  return guarded([&] {
    const auto report = histoconv::cmd_ingest(root, out_index_path);
    std::ostringstream out;
    out << report.summary;
    if (!report.skipped.empty()) {
      out << "\nskipped " << report.skipped.size() << " file(s):\n";
      for (const auto& s : report.skipped) out << "  " << s << "\n";
    }
    for (const auto& note : report.census_notes) out << "note: " << note << "\n";
    out << "wrote " << report.index_path << " (" << report.indexed << " records)\n";
    emit_report(report_text, out.str());
  });
}

hc_status hc_cmd_split(const char* index_path, double train_fraction, uint64_t seed,
                       const char* out_split_path, char** report_text) {
  if (!index_path || !out_split_path) return arg_error("hc_cmd_split: null argument");
  return guarded([&] {
    const auto report = histoconv::cmd_split(index_path, train_fraction, seed, out_split_path);
    std::ostringstream out;
    for (const auto& w : report.split.warnings) out << "warning: " << w << "\n";
    out << "wrote " << report.split_path << " (" << report.split.train_patients.size()
        << " train / " << report.split.test_patients.size() << " test patients)\n";
    emit_report(report_text, out.str());
  });
}

hc_status hc_cmd_train(const char* run_config_json, hc_progress_fn progress, void* user,
                       char** report_text) {
  if (!run_config_json) return arg_error("hc_cmd_train: null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(run_config_json);
    } catch (const nlohmann::json::exception& e) {
      histoconv::fail(histoconv::ErrorCode::config,
                      std::string("run config is not valid JSON: ") + e.what());
    }
    const auto rc = histoconv::run_config_from_json(j);
    histoconv::EpochCallback on_epoch;
    if (progress) {
      on_epoch = [&](const histoconv::EpochStats& s) {
        char line[256];
        std::snprintf(line, sizeof(line),
                      "epoch %zu/%zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f  lr %.3g",
                      s.epoch, rc.train.epochs, s.train_loss, s.train_acc, s.val_loss, s.val_acc,
                      s.lr);
        progress(line, user);
        return true;
      };
    }
    const auto report = histoconv::cmd_train(rc, on_epoch);
    std::ostringstream out;
    const auto& last = report.curve.back();
    out << "trained " << report.curve.size() << " epoch(s); final train_acc "
        << last.train_acc << ", val_acc " << last.val_acc << "\n";
    out << "wrote " << report.checkpoint_path << "\n";
    out << "wrote " << report.curves_path << "\n";
    out << "wrote " << report.manifest_path << "\n";
    emit_report(report_text, out.str());
  });
}

hc_status hc_cmd_eval(const char* checkpoint_path, const char* index_path,
                      const char* split_path, const char* side, const char* out_dir,
                      char** report_text) {
  if (!checkpoint_path || !index_path || !split_path || !side || !out_dir)
    return arg_error("hc_cmd_eval: null argument");
  return guarded([&] {
    const auto report = histoconv::cmd_eval(checkpoint_path, index_path, split_path, side,
                                            out_dir);
    std::ostringstream out;
    out << report.table;
    out << "\nwrote " << report.metrics_path << "\n";
    emit_report(report_text, out.str());
  });
}

hc_status hc_cmd_sweep(const char* run_config_json, const char* optimizers_csv,
                       const char* lrs_csv, hc_progress_fn progress, void* user,
                       char** report_text) {
  if (!run_config_json || !optimizers_csv || !lrs_csv)
    return arg_error("hc_cmd_sweep: null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(run_config_json);
    } catch (const nlohmann::json::exception& e) {
      histoconv::fail(histoconv::ErrorCode::config,
                      std::string("run config is not valid JSON: ") + e.what());
    }
    const auto rc = histoconv::run_config_from_json(j);
    const auto optimizers = parse_optimizer_csv(optimizers_csv);
    const auto lrs = parse_lr_csv(lrs_csv);
    histoconv::SweepCallback on_cell;
    if (progress) {
      on_cell = [&](const histoconv::SweepCell& c) {
        char line[128];
        std::snprintf(line, sizeof(line), "%s lr %.3g -> test accuracy %.4f",
                      histoconv::optimizer_kind_name(c.optimizer), c.lr, c.test_accuracy);
        progress(line, user);
      };
    }
    const auto report = histoconv::cmd_sweep(rc, optimizers, lrs, on_cell);
    std::ostringstream out;
    out << "swept " << report.cells.size() << " cell(s)\n";
    out << "wrote " << report.csv_path << "\n";
    emit_report(report_text, out.str());
  });
}

hc_status hc_cmd_augment_preview(const char* image_path, uint64_t seed, size_t count,
                                 const char* out_dir, const char* augment_json,
                                 char** report_text) {
  if (!image_path || !out_dir) return arg_error("hc_cmd_augment_preview: null argument");
  return guarded([&] {
    histoconv::AugmentConfig cfg;
    if (augment_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(augment_json);
      } catch (const nlohmann::json::exception& e) {
        histoconv::fail(histoconv::ErrorCode::config,
                        std::string("augment config is not valid JSON: ") + e.what());
      }
      histoconv::require_known_keys(j,
                                    {"zoom_range", "shear_range", "rotation_range",
                                     "width_shift_range", "height_shift_range", "horizontal_flip"},
                                    "augment config");
      cfg.zoom_range = histoconv::json_get<double>(j, "zoom_range", cfg.zoom_range, "augment config");
      cfg.shear_range =
          histoconv::json_get<double>(j, "shear_range", cfg.shear_range, "augment config");
      cfg.rotation_range =
          histoconv::json_get<double>(j, "rotation_range", cfg.rotation_range, "augment config");
      cfg.width_shift_range = histoconv::json_get<double>(j, "width_shift_range",
                                                          cfg.width_shift_range, "augment config");
      cfg.height_shift_range = histoconv::json_get<double>(
          j, "height_shift_range", cfg.height_shift_range, "augment config");
      cfg.horizontal_flip =
          histoconv::json_get<bool>(j, "horizontal_flip", cfg.horizontal_flip, "augment config");
    }
    const auto report = histoconv::cmd_augment_preview(image_path, seed, count, out_dir, cfg);
    std::ostringstream out;
    out << "wrote " << report.outputs.size() << " image(s) to " << out_dir << "\n";
    emit_report(report_text, out.str());
  });
}

}  // extern "C"

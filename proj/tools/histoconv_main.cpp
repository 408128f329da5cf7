// Command-line front end. All real work happens behind the C API in
// libhistoconv; this file only parses flags, folds overrides into run
// configs, and maps hc_status values to exit codes.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <histoconv.h>

namespace {

using nlohmann::json;

void print_progress(const char* line, void*) {
  std::puts(line);
  std::fflush(stdout);
}

int finish(hc_status status, char* report) {
  if (report) {
    std::fputs(report, stdout);
    hc_string_free(report);
  }
  if (status != HC_OK) std::fprintf(stderr, "error: %s\n", hc_last_error());
  return static_cast<int>(status);
}

int config_error(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  return static_cast<int>(HC_ERROR_CONFIG);
}

bool load_config_json(const std::string& path, json& out, std::string& error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    error = "cannot open '" + path + "'";
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    out = json::parse(buf.str());
  } catch (const json::exception& e) {
    error = "cannot parse '" + path + "' as JSON: " + std::string(e.what());
    return false;
  }
  if (!out.is_object()) {
    error = "'" + path + "' must hold a JSON object";
    return false;
  }
  return true;
}

// Shared flag set for the commands that take a run config file.
struct RunOverrides {
  std::string config_path;
  std::string index_path, split_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, batch_size = 0;
  double lr = 0.0, decay = 0.0;
  std::string optimizer, validation;
  bool no_augment = false;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunOverrides& ov, bool with_optimizer) {
  cmd->add_option("--config", ov.config_path, "Run config JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--index", ov.index_path, "Override the index file path");
  cmd->add_option("--split", ov.split_path, "Override the split file path");
  cmd->add_option("--out-dir", ov.out_dir, "Override the output directory");
  cmd->add_option("--seed", ov.seed, "Override the run seed");
  cmd->add_option("--epochs", ov.epochs, "Override the epoch count");
  cmd->add_option("--batch-size", ov.batch_size, "Override the batch size");
  cmd->add_option("--decay", ov.decay, "Override the learning-rate decay");
  if (with_optimizer) {
    cmd->add_option("--lr", ov.lr, "Override the learning rate");
    cmd->add_option("--optimizer", ov.optimizer,
                    "Override the optimizer (sgd, adam, rmsprop, nadam)");
  }
  cmd->add_option("--validation", ov.validation,
                  "Validation policy: holdout (default) or test");
  cmd->add_flag("--no-augment", ov.no_augment, "Disable training-time augmentation");
  cmd->add_flag("--quiet", ov.quiet, "Suppress per-epoch progress lines");
}

// Flags win over file values; the merged document goes to the library.
bool merge_run_config(const CLI::App* cmd, const RunOverrides& ov, json& j, std::string& error) {
  if (!load_config_json(ov.config_path, j, error)) return false;
  // sweep does not register --lr/--optimizer, so look options up tolerantly
  const auto given = [&](const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--index")) j["index"] = ov.index_path;
  if (given("--split")) j["split"] = ov.split_path;
  if (given("--out-dir")) j["out_dir"] = ov.out_dir;
  if (given("--seed")) j["seed"] = ov.seed;
  if (given("--epochs")) j["epochs"] = ov.epochs;
  if (given("--batch-size")) j["batch_size"] = ov.batch_size;
  if (given("--decay")) j["decay"] = ov.decay;
  if (given("--validation")) j["validation"] = ov.validation;
  if (given("--lr")) j["optimizer"]["lr"] = ov.lr;
  if (given("--optimizer")) j["optimizer"]["kind"] = ov.optimizer;
  if (ov.no_augment) j["augment"]["enabled"] = false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN training and evaluation toolkit for histopathology image classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hc_version());
  std::function<int()> action;

  // ingest
  std::string ingest_root, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Index a corpus directory into an index file");
  ingest->add_option("--root", ingest_root, "Corpus root directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest->add_option("--out", ingest_out, "Output index JSON path")->required();
  ingest->callback([&] {
    action = [&]() {
      char* report = nullptr;
      const hc_status st = hc_cmd_ingest(ingest_root.c_str(), ingest_out.c_str(), &report);
      return finish(st, report);
    };
  });

  // split
  std::string split_index, split_out;
  double split_frac = 0.7;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "Create a patient-exclusive train/test split");
  split->add_option("--index", split_index, "Index JSON file")->required()->check(CLI::ExistingFile);
  split->add_option("--train-frac", split_frac, "Training image fraction (default 0.7)");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->add_option("--out", split_out, "Output split JSON path")->required();
  split->callback([&] {
    action = [&]() {
      char* report = nullptr;
      const hc_status st =
          hc_cmd_split(split_index.c_str(), split_frac, split_seed, split_out.c_str(), &report);
      return finish(st, report);
    };
  });

  // train
  RunOverrides train_ov;
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  add_run_flags(train, train_ov, true);
  train->callback([&] {
    action = [&]() {
      json j;
      std::string error;
      if (!merge_run_config(train, train_ov, j, error)) return config_error(error);
      char* report = nullptr;
      const hc_status st =
          hc_cmd_train(j.dump().c_str(), train_ov.quiet ? nullptr : print_progress, nullptr,
                       &report);
      return finish(st, report);
    };
  });

  // eval
  std::string eval_ckpt, eval_index, eval_split, eval_side = "test", eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write the metrics report");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--index", eval_index, "Index JSON file")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "Split JSON file")->required()->check(CLI::ExistingFile);
  eval->add_option("--side", eval_side, "Which split side to score: train or test (default test)");
  eval->add_option("--out-dir", eval_out, "Output directory")->required();
  eval->callback([&] {
    action = [&]() {
      char* report = nullptr;
      const hc_status st = hc_cmd_eval(eval_ckpt.c_str(), eval_index.c_str(), eval_split.c_str(),
                                       eval_side.c_str(), eval_out.c_str(), &report);
      return finish(st, report);
    };
  });

  // sweep
  RunOverrides sweep_ov;
  std::string sweep_optimizers = "sgd,adam,rmsprop,nadam";
  std::string sweep_lrs = "1e-2,1e-3,1e-4";
  auto* sweep = app.add_subcommand("sweep", "Train one model per (optimizer, learning rate) cell");
  add_run_flags(sweep, sweep_ov, false);
  sweep->add_option("--optimizers", sweep_optimizers, "Comma-separated optimizer list");
  sweep->add_option("--lrs", sweep_lrs, "Comma-separated learning-rate list");
  sweep->callback([&] {
    action = [&]() {
      json j;
      std::string error;
      if (!merge_run_config(sweep, sweep_ov, j, error)) return config_error(error);
      char* report = nullptr;
      const hc_status st =
          hc_cmd_sweep(j.dump().c_str(), sweep_optimizers.c_str(), sweep_lrs.c_str(),
                       sweep_ov.quiet ? nullptr : print_progress, nullptr, &report);
      return finish(st, report);
    };
  });

  // augment-preview
  std::string prev_image, prev_out;
  std::uint64_t prev_seed = 0;
  std::size_t prev_count = 8;
  double prev_zoom = 0.2, prev_shear = 0.2, prev_rot = 42.0, prev_wshift = 0.2, prev_hshift = 0.2;
  bool prev_no_flip = false;
  auto* preview = app.add_subcommand("augment-preview",
                                     "Write augmented variants of one image for inspection");
  preview->add_option("--image", prev_image, "Input PNG")->required()->check(CLI::ExistingFile);
  preview->add_option("--seed", prev_seed, "Draw seed");
  preview->add_option("--count", prev_count, "Number of variants (default 8)");
  preview->add_option("--out", prev_out, "Output directory")->required();
  preview->add_option("--zoom-range", prev_zoom, "Zoom range (default 0.2)");
  preview->add_option("--shear-range", prev_shear, "Shear range in radians (default 0.2)");
  preview->add_option("--rotation-range", prev_rot, "Rotation range in degrees (default 42)");
  preview->add_option("--width-shift-range", prev_wshift, "Width shift fraction (default 0.2)");
  preview->add_option("--height-shift-range", prev_hshift, "Height shift fraction (default 0.2)");
  preview->add_flag("--no-flip", prev_no_flip, "Disable the horizontal-flip coin");
  preview->callback([&] {
    action = [&]() {
      json aug = {{"zoom_range", prev_zoom},
                  {"shear_range", prev_shear},
                  {"rotation_range", prev_rot},
                  {"width_shift_range", prev_wshift},
                  {"height_shift_range", prev_hshift},
                  {"horizontal_flip", !prev_no_flip}};
      char* report = nullptr;
      const hc_status st = hc_cmd_augment_preview(prev_image.c_str(), prev_seed, prev_count,
                                                  prev_out.c_str(), aug.dump().c_str(), &report);
      return finish(st, report);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(HC_ERROR_CONFIG);
  }

  return action ? action() : config_error("no subcommand given");
}

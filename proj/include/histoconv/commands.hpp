#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histoconv/train.hpp"

namespace histoconv {

// File-to-file operations behind the CLI subcommands. Each artifact-producing
// call also writes a manifest (config snapshot, input hashes, timestamps,
// software version): `<output>.manifest.json` next to single-file outputs,
// `manifest.json` inside directory outputs.

struct IngestReport {
  std::size_t indexed = 0;
  std::vector<std::string> skipped;
  std::string summary;                    // corpus counts in the census table layout
  std::vector<std::string> census_notes;  // census self-inconsistencies + corpus deviations
  std::string index_path;
  std::string manifest_path;
};

IngestReport cmd_ingest(const std::string& root, const std::string& out_index_path);

struct SplitReport {
  SplitSpec split;
  std::string split_path;
  std::string manifest_path;
};

SplitReport cmd_split(const std::string& index_path, double train_fraction, std::uint64_t seed,
                      const std::string& out_split_path);

// A run config is a TrainConfig document plus the three I/O keys "index",
// "split" and "out_dir". The CLI folds flag overrides into the JSON before
// parsing, so the parsed struct is always the complete effective config.
struct RunConfig {
  std::string index_path;
  std::string split_path;
  std::string out_dir;
  TrainConfig train;
};

RunConfig run_config_from_json(const nlohmann::json& j);

struct TrainReport {
  std::vector<EpochStats> curve;
  std::string checkpoint_path;
  std::string curves_path;
  std::string manifest_path;
};

TrainReport cmd_train(const RunConfig& rc, const EpochCallback& on_epoch = {});

struct EvalReport {
  MetricsReport metrics;
  std::string table;
  std::string metrics_path;
  std::string manifest_path;
};

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& index_path,
                    const std::string& split_path, const std::string& side,
                    const std::string& out_dir);

struct SweepReport {
  std::vector<SweepCell> cells;
  std::string csv_path;
  std::string manifest_path;
};

SweepReport cmd_sweep(const RunConfig& rc, const std::vector<OptimizerKind>& optimizers,
                      const std::vector<double>& lrs, const SweepCallback& on_cell = {});

struct PreviewReport {
  std::vector<std::string> outputs;
  std::string manifest_path;
};

PreviewReport cmd_augment_preview(const std::string& image_path, std::uint64_t seed,
                                  std::size_t count, const std::string& out_dir,
                                  const AugmentConfig& cfg);

// 64-bit FNV-1a, hex encoded; used for the input fingerprints in manifests.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace histoconv

#include "histoconv/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>

#include "histoconv/checkpoint.hpp"
#include "histoconv/image_io.hpp"
#include "histoconv/jsonutil.hpp"
#include "histoconv/version.hpp"

namespace histoconv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_base(const std::string& command) {
  json m;
  m["command"] = command;
  m["version"] = HISTOCONV_VERSION;
  m["timestamp_utc"] = utc_timestamp();
  return m;
}

void write_manifest(const std::string& path, const json& m) {
  write_text_file(path, m.dump(2) + "\n");
}

void ensure_parent_dir(const std::string& file_path) {
  const fs::path parent = fs::path(file_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) fail(ErrorCode::config, "output directory must not be empty");
  fs::create_directories(dir);
}

DatasetIndex load_index_file(const std::string& path) {
  return index_from_json_text(read_text_file(path));
}

SplitSpec load_split_file(const std::string& path) {
  return split_from_json_text(read_text_file(path));
}

// Index restricted to one patient subset, with patient buckets rebuilt.
DatasetIndex subset_index(const DatasetIndex& index, const std::vector<std::size_t>& records) {
  DatasetIndex sub;
  for (std::size_t i : records) sub.records.push_back(index.records[i]);
  for (std::size_t i = 0; i < sub.records.size(); ++i)
    sub.patients[sub.records[i].patient_id].push_back(i);
  return sub;
}

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kValSplitStream = 4;
constexpr std::uint64_t kPreviewStream = 5;

}  // namespace

IngestReport cmd_ingest(const std::string& root, const std::string& out_index_path) {
  IndexBuild build = build_index(root);

  IngestReport report;
  report.indexed = build.index.records.size();
  report.skipped = build.skipped;
  report.summary = summary_table(build.index);
  for (auto& note : check_census(breakhis_census()))
    report.census_notes.push_back("census: " + note);
  for (auto& note : compare_with_census(build.index, breakhis_census()))
    report.census_notes.push_back("corpus: " + note);

  const std::string index_text = index_to_json_text(build.index);
  ensure_parent_dir(out_index_path);
  write_text_file(out_index_path, index_text);
  report.index_path = out_index_path;

  json m = manifest_base("ingest");
  m["inputs"] = {{"root", root}};
  m["outputs"] = {{"index", out_index_path}};
  m["index_hash"] = fnv1a_hex(index_text);
  m["indexed"] = report.indexed;
  m["skipped"] = report.skipped;
  report.manifest_path = out_index_path + ".manifest.json";
  write_manifest(report.manifest_path, m);
  return report;
}

SplitReport cmd_split(const std::string& index_path, double train_fraction, std::uint64_t seed,
                      const std::string& out_split_path) {
  const std::string index_text = read_text_file(index_path);
  const DatasetIndex index = index_from_json_text(index_text);

  SplitReport report;
  report.split = patient_exclusive_split(index, train_fraction, seed);
  validate_split(index, report.split);

  const std::string split_text = split_to_json_text(report.split);
  ensure_parent_dir(out_split_path);
  write_text_file(out_split_path, split_text);
  report.split_path = out_split_path;

  json m = manifest_base("split");
  m["inputs"] = {{"index", index_path}};
  m["inputs_hash"] = {{"index", fnv1a_hex(index_text)}};
  m["outputs"] = {{"split", out_split_path}};
  m["seed"] = seed;
  m["train_fraction"] = train_fraction;
  m["train_patients"] = report.split.train_patients.size();
  m["test_patients"] = report.split.test_patients.size();
  report.manifest_path = out_split_path + ".manifest.json";
  write_manifest(report.manifest_path, m);
  return report;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::config, "run config must be a JSON object");
  RunConfig rc;
  json train_part = json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "index")
      rc.index_path = value.get<std::string>();
    else if (key == "split")
      rc.split_path = value.get<std::string>();
    else if (key == "out_dir")
      rc.out_dir = value.get<std::string>();
    else
      train_part[key] = value;
  }
  if (rc.index_path.empty()) fail(ErrorCode::config, "run config is missing 'index'");
  if (rc.split_path.empty()) fail(ErrorCode::config, "run config is missing 'split'");
  if (rc.out_dir.empty()) fail(ErrorCode::config, "run config is missing 'out_dir'");
  rc.train = train_config_from_json(train_part);
  return rc;
}

namespace {

struct PreparedData {
  LoadedSet train_set;
  LoadedSet val_set;
  LoadedSet test_set;
  std::string validation_note;
  std::string index_hash;
  std::string split_hash;
};

// Resolves the index/split pair into loaded train/validation/test sets per
// the config's validation policy.
PreparedData prepare_data(const RunConfig& rc, bool need_val) {
  const std::string index_text = read_text_file(rc.index_path);
  const std::string split_text = read_text_file(rc.split_path);
  const DatasetIndex index = index_from_json_text(index_text);
  const SplitSpec split = split_from_json_text(split_text);
  validate_split(index, split);

  const auto train_records = split_records(index, split, false);
  const auto test_records = split_records(index, split, true);
  const std::size_t h = rc.train.model.input_h, w = rc.train.model.input_w;

  PreparedData data;
  data.index_hash = fnv1a_hex(index_text);
  data.split_hash = fnv1a_hex(split_text);
  data.test_set = load_records(index, test_records, h, w);

  if (!need_val || rc.train.validation == "test") {
    data.train_set = load_records(index, train_records, h, w);
    data.val_set = data.test_set;
    data.validation_note = "validation scores the test side";
    return data;
  }

  const DatasetIndex sub = subset_index(index, train_records);
  if (sub.patients.size() < 2)
    fail(ErrorCode::data,
         "cannot hold out validation patients: the training side has fewer than 2 patients "
         "(set \"validation\": \"test\" to score the test side instead)");
  const SplitSpec holdout = patient_exclusive_split(
      sub, 1.0 - rc.train.validation_fraction, Rng::derive(rc.train.seed, kValSplitStream, 0));
  data.train_set = load_records(sub, split_records(sub, holdout, false), h, w);
  data.val_set = load_records(sub, split_records(sub, holdout, true), h, w);
  data.validation_note =
      "validation holds out " + std::to_string(holdout.test_patients.size()) +
      " of " + std::to_string(sub.patients.size()) + " training patients";
  return data;
}

}  // namespace

TrainReport cmd_train(const RunConfig& rc, const EpochCallback& on_epoch) {
  rc.train.validate();
  PreparedData data = prepare_data(rc, true);

  Rng init_rng(Rng::derive(rc.train.seed, kInitStream, 0));
  Model<float> model(rc.train.model, init_rng);

  TrainReport report;
  report.curve = train(model, data.train_set, data.val_set, rc.train, on_epoch);

  ensure_dir(rc.out_dir);
  report.checkpoint_path = (fs::path(rc.out_dir) / "checkpoint.hcnn").string();
  save_checkpoint(report.checkpoint_path, model, rc.train.seed, rc.train.epochs);
  report.curves_path = (fs::path(rc.out_dir) / "curves.csv").string();
  write_text_file(report.curves_path, curves_to_csv(report.curve));

  json m = manifest_base("train");
  m["inputs"] = {{"index", rc.index_path}, {"split", rc.split_path}};
  m["inputs_hash"] = {{"index", data.index_hash}, {"split", data.split_hash}};
  m["outputs"] = {{"checkpoint", report.checkpoint_path}, {"curves", report.curves_path}};
  m["config"] = train_config_to_json(rc.train);
  m["seed"] = rc.train.seed;
  m["validation_note"] = data.validation_note;
  m["train_images"] = data.train_set.images.size();
  m["val_images"] = data.val_set.images.size();
  m["test_images"] = data.test_set.images.size();
  report.manifest_path = (fs::path(rc.out_dir) / "manifest.json").string();
  write_manifest(report.manifest_path, m);
  return report;
}

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& index_path,
                    const std::string& split_path, const std::string& side,
                    const std::string& out_dir) {
  if (side != "train" && side != "test")
    fail(ErrorCode::config, "side must be 'train' or 'test', got '" + side + "'");

  LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
  const std::string index_text = read_text_file(index_path);
  const std::string split_text = read_text_file(split_path);
  const DatasetIndex index = index_from_json_text(index_text);
  const SplitSpec split = split_from_json_text(split_text);
  validate_split(index, split);

  const auto records = split_records(index, split, side == "test");
  const LoadedSet set = load_records(index, records, ckpt.model.config().input_h,
                                     ckpt.model.config().input_w);

  std::vector<std::string> names;
  if (ckpt.model.config().classes == five_class_names().size())
    names = five_class_names();
  else
    for (std::size_t c = 0; c < ckpt.model.config().classes; ++c)
      names.push_back("class_" + std::to_string(c));

  EvalReport report;
  report.metrics = evaluate_report(ckpt.model, set, names);
  report.table = metrics_table(report.metrics);

  ensure_dir(out_dir);
  report.metrics_path = (fs::path(out_dir) / "metrics.json").string();
  write_text_file(report.metrics_path, metrics_to_json_text(report.metrics));

  json m = manifest_base("eval");
  m["inputs"] = {{"checkpoint", checkpoint_path}, {"index", index_path}, {"split", split_path}};
  m["inputs_hash"] = {{"index", fnv1a_hex(index_text)}, {"split", fnv1a_hex(split_text)}};
  m["outputs"] = {{"metrics", report.metrics_path}};
  m["side"] = side;
  m["images"] = set.images.size();
  m["accuracy"] = report.metrics.accuracy;
  report.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  write_manifest(report.manifest_path, m);
  return report;
}

SweepReport cmd_sweep(const RunConfig& rc, const std::vector<OptimizerKind>& optimizers,
                      const std::vector<double>& lrs, const SweepCallback& on_cell) {
  rc.train.validate();
  PreparedData data = prepare_data(rc, false);

  SweepReport report;
  report.cells = sweep(data.train_set, data.test_set, rc.train, optimizers, lrs, on_cell);

  ensure_dir(rc.out_dir);
  report.csv_path = (fs::path(rc.out_dir) / "sweep.csv").string();
  write_text_file(report.csv_path, sweep_to_csv(report.cells));

  json grid_opts = json::array();
  for (OptimizerKind k : optimizers) grid_opts.push_back(optimizer_kind_name(k));
  json m = manifest_base("sweep");
  m["inputs"] = {{"index", rc.index_path}, {"split", rc.split_path}};
  m["inputs_hash"] = {{"index", data.index_hash}, {"split", data.split_hash}};
  m["outputs"] = {{"sweep", report.csv_path}};
  m["config"] = train_config_to_json(rc.train);
  m["grid"] = {{"optimizers", grid_opts}, {"learning_rates", lrs}};
  report.manifest_path = (fs::path(rc.out_dir) / "manifest.json").string();
  write_manifest(report.manifest_path, m);
  return report;
}

PreviewReport cmd_augment_preview(const std::string& image_path, std::uint64_t seed,
                                  std::size_t count, const std::string& out_dir,
                                  const AugmentConfig& cfg) {
  cfg.validate();
  const Tensor img = read_png(image_path);
  ensure_dir(out_dir);

  PreviewReport report;
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(Rng::derive(seed, kPreviewStream, k));
    const Tensor out = augment_image(img, cfg, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "aug_%03zu.png", k);
    const std::string path = (fs::path(out_dir) / name).string();
    write_png(path, out);
    report.outputs.push_back(path);
  }

  json m = manifest_base("augment-preview");
  m["inputs"] = {{"image", image_path}};
  m["outputs"] = {{"count", count}, {"dir", out_dir}};
  m["seed"] = seed;
  m["augment"] = {{"zoom_range", cfg.zoom_range},
                  {"shear_range", cfg.shear_range},
                  {"rotation_range", cfg.rotation_range},
                  {"width_shift_range", cfg.width_shift_range},
                  {"height_shift_range", cfg.height_shift_range},
                  {"horizontal_flip", cfg.horizontal_flip}};
  report.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  write_manifest(report.manifest_path, m);
  return report;
}

}  // namespace histoconv

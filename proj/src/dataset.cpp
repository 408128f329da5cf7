#include "histoconv/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histoconv/error.hpp"
#include "histoconv/image_io.hpp"
#include "histoconv/metrics.hpp"
#include "histoconv/rng.hpp"

namespace histoconv {

namespace fs = std::filesystem;
using nlohmann::json;

const char* binary_class_name(BinaryClass c) {
  return c == BinaryClass::benign ? "benign" : "malignant";
}

namespace {

struct SubtypeInfo {
  Subtype subtype;
  const char* code;
  const char* name;
  BinaryClass cls;
  std::size_t five_class;
};

constexpr SubtypeInfo kSubtypes[] = {
    {Subtype::adenosis, "A", "adenosis", BinaryClass::benign, 0},
    {Subtype::fibroadenoma, "F", "fibroadenoma", BinaryClass::benign, 0},
    {Subtype::phyllodes_tumor, "PT", "phyllodes_tumor", BinaryClass::benign, 0},
    {Subtype::tubular_adenoma, "TA", "tubular_adenoma", BinaryClass::benign, 0},
    {Subtype::ductal_carcinoma, "DC", "ductal_carcinoma", BinaryClass::malignant, 1},
    {Subtype::lobular_carcinoma, "LC", "lobular_carcinoma", BinaryClass::malignant, 2},
    {Subtype::mucinous_carcinoma, "MC", "mucinous_carcinoma", BinaryClass::malignant, 3},
    {Subtype::papillary_carcinoma, "PC", "papillary_carcinoma", BinaryClass::malignant, 4},
};

const SubtypeInfo& subtype_info(Subtype s) {
  for (const auto& info : kSubtypes)
    if (info.subtype == s) return info;
  fail(ErrorCode::internal, "bad subtype value");
}

std::string valid_codes() {
  std::string out;
  for (const auto& info : kSubtypes) {
    if (!out.empty()) out += ", ";
    out += info.code;
  }
  return out;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool alnum(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

[[noreturn]] void bad_name(const std::string& name, const std::string& what) {
  fail(ErrorCode::data, "cannot parse '" + name + "': " + what);
}

}  // namespace

const char* subtype_name(Subtype s) { return subtype_info(s).name; }
const char* subtype_code(Subtype s) { return subtype_info(s).code; }
BinaryClass subtype_class(Subtype s) { return subtype_info(s).cls; }
std::size_t subtype_five_class(Subtype s) { return subtype_info(s).five_class; }

SampleRecord parse_filename(const std::string& name) {
  const std::string base = fs::path(name).filename().string();

  std::string stem = base;
  if (stem.size() >= 4) {
    std::string ext = stem.substr(stem.size() - 4);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png") bad_name(base, "not a .png filename");
    stem = stem.substr(0, stem.size() - 4);
  } else {
    bad_name(base, "not a .png filename");
  }

  std::vector<std::string> parts;
  std::stringstream ss(stem);
  std::string piece;
  while (std::getline(ss, piece, '_')) parts.push_back(piece);
  if (parts.size() != 3)
    bad_name(base, "expected METHOD_CLASS_DETAILS separated by '_', got " +
                       std::to_string(parts.size()) + " segment(s)");
  if (parts[0].empty()) bad_name(base, "empty method segment");

  BinaryClass cls;
  if (parts[1] == "B")
    cls = BinaryClass::benign;
  else if (parts[1] == "M")
    cls = BinaryClass::malignant;
  else
    bad_name(base, "class segment must be B or M, got '" + parts[1] + "'");

  std::vector<std::string> fields;
  std::stringstream ds(parts[2]);
  while (std::getline(ds, piece, '-')) fields.push_back(piece);
  if (fields.size() != 5)
    bad_name(base, "details segment must be SUBTYPE-YEAR-SLIDE-MAGNIFICATION-SEQUENCE, got " +
                       std::to_string(fields.size()) + " field(s)");

  const SubtypeInfo* info = nullptr;
  for (const auto& cand : kSubtypes)
    if (fields[0] == cand.code) info = &cand;
  if (!info)
    bad_name(base, "unknown subtype code '" + fields[0] + "' (valid: " + valid_codes() + ")");
  if (info->cls != cls)
    bad_name(base, std::string("subtype ") + info->code + " is " + binary_class_name(info->cls) +
                       " but the class segment says " + parts[1]);

  if (!all_digits(fields[1])) bad_name(base, "year segment '" + fields[1] + "' is not numeric");
  if (!alnum(fields[2])) bad_name(base, "slide segment '" + fields[2] + "' is not alphanumeric");

  if (!all_digits(fields[3]))
    bad_name(base, "magnification segment '" + fields[3] + "' is not numeric");
  const int mag = std::stoi(fields[3]);
  if (mag != 40 && mag != 100 && mag != 200 && mag != 400)
    bad_name(base, "magnification must be 40, 100, 200 or 400, got " + fields[3]);

  if (!all_digits(fields[4]) || fields[4].size() > 9)
    bad_name(base, "sequence segment '" + fields[4] + "' is not numeric");

  SampleRecord r;
  r.path = name;
  r.method = parts[0];
  r.binary_class = cls;
  r.subtype = info->subtype;
  r.five_class = info->five_class;
  r.magnification = mag;
  r.patient_id = fields[0] + "-" + fields[1] + "-" + fields[2];
  r.seq = std::stoi(fields[4]);
  r.seq_width = static_cast<int>(fields[4].size());
  return r;
}

std::string record_filename(const SampleRecord& r) {
  std::string seq = std::to_string(r.seq);
  while (static_cast<int>(seq.size()) < r.seq_width) seq.insert(seq.begin(), '0');
  return r.method + "_" + (r.binary_class == BinaryClass::benign ? "B" : "M") + "_" +
         r.patient_id + "-" + std::to_string(r.magnification) + "-" + seq + ".png";
}

std::map<int, MagnificationCounts> DatasetIndex::counts_by_magnification() const {
  std::map<int, MagnificationCounts> counts;
  for (const auto& r : records) {
    auto& row = counts[r.magnification];
    if (r.binary_class == BinaryClass::benign)
      ++row.benign;
    else
      ++row.malignant;
  }
  return counts;
}

MagnificationCounts DatasetIndex::totals() const {
  MagnificationCounts t;
  for (const auto& r : records) {
    if (r.binary_class == BinaryClass::benign)
      ++t.benign;
    else
      ++t.malignant;
  }
  return t;
}

IndexBuild build_index(const std::string& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    fail(ErrorCode::data, "corpus root '" + root + "' is not a readable directory");

  IndexBuild out;
  std::vector<std::string> paths;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) fail(ErrorCode::data, "error scanning '" + root + "': " + ec.message());
    if (!it->is_regular_file()) continue;
    std::string ext = it->path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") paths.push_back(it->path().string());
  }
  std::sort(paths.begin(), paths.end());

  for (const auto& p : paths) {
    try {
      out.index.records.push_back(parse_filename(p));
    } catch (const Error& e) {
      out.skipped.push_back(e.what());
    }
  }
  if (out.index.records.empty())
    fail(ErrorCode::data, "no samples found under '" + root + "'");

  for (std::size_t i = 0; i < out.index.records.size(); ++i)
    out.index.patients[out.index.records[i].patient_id].push_back(i);
  return out;
}

std::string summary_table(const DatasetIndex& index) {
  const auto counts = index.counts_by_magnification();
  const auto total = index.totals();

  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-14s %8s %10s %16s\n", "Magnification", "Benign",
                "Malignant", "Total of Images");
  out << line;
  for (const auto& [mag, row] : counts) {
    const std::string label = std::to_string(mag) + "X";
    std::snprintf(line, sizeof(line), "%-14s %8llu %10llu %16llu\n", label.c_str(),
                  static_cast<unsigned long long>(row.benign),
                  static_cast<unsigned long long>(row.malignant),
                  static_cast<unsigned long long>(row.total()));
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-14s %8llu %10llu %16llu\n", "Total",
                static_cast<unsigned long long>(total.benign),
                static_cast<unsigned long long>(total.malignant),
                static_cast<unsigned long long>(total.total()));
  out << line;
  return out.str();
}

std::string index_to_json_text(const DatasetIndex& index) {
  json records = json::array();
  for (const auto& r : index.records) {
    records.push_back({{"path", r.path},
                       {"binary_class", binary_class_name(r.binary_class)},
                       {"subtype", subtype_name(r.subtype)},
                       {"five_class", five_class_names()[r.five_class]},
                       {"magnification", r.magnification},
                       {"patient_id", r.patient_id},
                       {"seq", r.seq}});
  }

  json counts;
  for (const auto& [mag, row] : index.counts_by_magnification()) {
    counts[std::to_string(mag)] = {
        {"benign", row.benign}, {"malignant", row.malignant}, {"total", row.total()}};
  }
  const auto total = index.totals();
  counts["total"] = {
      {"benign", total.benign}, {"malignant", total.malignant}, {"total", total.total()}};

  json j;
  j["records"] = records;
  j["counts"] = counts;
  return j.dump(2) + "\n";
}

DatasetIndex index_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("index JSON parse error: ") + e.what());
  }

  DatasetIndex index;
  try {
    for (const auto& rec : j.at("records")) {
      const std::string path = rec.at("path").get<std::string>();
      SampleRecord r = parse_filename(path);
      r.path = path;
      if (rec.at("binary_class").get<std::string>() != binary_class_name(r.binary_class) ||
          rec.at("subtype").get<std::string>() != subtype_name(r.subtype) ||
          rec.at("five_class").get<std::string>() != five_class_names()[r.five_class] ||
          rec.at("magnification").get<int>() != r.magnification ||
          rec.at("patient_id").get<std::string>() != r.patient_id ||
          rec.at("seq").get<int>() != r.seq)
        fail(ErrorCode::data,
             "index record for '" + path + "' disagrees with its filename fields");
      index.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("index JSON missing field: ") + e.what());
  }
  if (index.records.empty()) fail(ErrorCode::data, "index contains no records");
  for (std::size_t i = 0; i < index.records.size(); ++i)
    index.patients[index.records[i].patient_id].push_back(i);
  return index;
}

const Census& breakhis_census() {
  static const Census census = {
      {{40, 652, 1370, 1995}, {100, 644, 1437, 2081}, {200, 623, 1390, 2013},
       {400, 588, 1232, 1820}},
      2480,
      5429,
      7909,
      9109,
      82,
  };
  return census;
}

std::vector<std::string> check_census(const Census& census) {
  std::vector<std::string> notes;
  std::uint64_t benign_sum = 0, malignant_sum = 0, total_sum = 0;
  for (const auto& row : census.rows) {
    const std::uint64_t sum = row.benign + row.malignant;
    if (sum != row.printed_total)
      notes.push_back(std::to_string(row.magnification) + "X row is internally inconsistent: " +
                      std::to_string(row.benign) + " + " + std::to_string(row.malignant) + " = " +
                      std::to_string(sum) + ", but the printed total is " +
                      std::to_string(row.printed_total));
    benign_sum += row.benign;
    malignant_sum += row.malignant;
    total_sum += row.printed_total;
  }
  if (benign_sum != census.printed_benign_total)
    notes.push_back("benign column sums to " + std::to_string(benign_sum) +
                    ", but the printed benign total is " +
                    std::to_string(census.printed_benign_total));
  if (malignant_sum != census.printed_malignant_total)
    notes.push_back("malignant column sums to " + std::to_string(malignant_sum) +
                    ", but the printed malignant total is " +
                    std::to_string(census.printed_malignant_total));
  if (total_sum != census.printed_grand_total)
    notes.push_back("row totals sum to " + std::to_string(total_sum) +
                    ", but the printed grand total is " +
                    std::to_string(census.printed_grand_total));
  if (census.claimed_image_count != census.printed_grand_total)
    notes.push_back("prose claims " + std::to_string(census.claimed_image_count) +
                    " images, but the table's grand total is " +
                    std::to_string(census.printed_grand_total));
  return notes;
}

std::vector<std::string> compare_with_census(const DatasetIndex& index, const Census& census) {
  std::vector<std::string> notes;
  const auto counts = index.counts_by_magnification();
  for (const auto& row : census.rows) {
    auto it = counts.find(row.magnification);
    const MagnificationCounts actual = it == counts.end() ? MagnificationCounts{} : it->second;
    if (actual.benign != row.benign || actual.malignant != row.malignant)
      notes.push_back(std::to_string(row.magnification) + "X: corpus has " +
                      std::to_string(actual.benign) + " benign / " +
                      std::to_string(actual.malignant) + " malignant, census prints " +
                      std::to_string(row.benign) + " / " + std::to_string(row.malignant));
  }
  for (const auto& [mag, actual] : counts) {
    const bool known = std::any_of(census.rows.begin(), census.rows.end(),
                                   [mag = mag](const CensusRow& r) { return r.magnification == mag; });
    if (!known)
      notes.push_back(std::to_string(mag) + "X: present in corpus (" +
                      std::to_string(actual.total()) + " images) but absent from the census");
  }
  const auto total = index.totals();
  if (total.total() != census.printed_grand_total)
    notes.push_back("corpus holds " + std::to_string(total.total()) +
                    " images, census grand total is " + std::to_string(census.printed_grand_total));
  if (total.total() != census.claimed_image_count)
    notes.push_back("corpus holds " + std::to_string(total.total()) +
                    " images, census prose claims " + std::to_string(census.claimed_image_count));
  if (index.patients.size() != census.claimed_patient_count)
    notes.push_back("corpus holds " + std::to_string(index.patients.size()) +
                    " patients, census claims " + std::to_string(census.claimed_patient_count));
  return notes;
}

SplitSpec split_from_order(const DatasetIndex& index, const std::vector<std::string>& order,
                           double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::config,
         "train fraction must be in (0, 1), got " + std::to_string(train_fraction));
  if (index.patients.size() < 2)
    fail(ErrorCode::data, "patient-exclusive split needs at least 2 patients, got " +
                              std::to_string(index.patients.size()));
  if (order.size() != index.patients.size())
    fail(ErrorCode::internal, "split order must list every patient exactly once");

  const std::uint64_t total_images = index.records.size();
  const double target = train_fraction * static_cast<double>(total_images);

  SplitSpec split;
  split.train_fraction = train_fraction;

  std::uint64_t max_images = 0;
  for (const auto& [id, recs] : index.patients)
    max_images = std::max<std::uint64_t>(max_images, recs.size());
  if (static_cast<double>(max_images) >
      (1.0 - train_fraction) * static_cast<double>(total_images)) {
    split.warnings.push_back(
        "largest patient holds " + std::to_string(max_images) + " of " +
        std::to_string(total_images) +
        " images, more than the test share; the split is best effort");
  }

  std::uint64_t train_images = 0;
  std::size_t cut = 0;
  while (cut < order.size() && static_cast<double>(train_images) < target) {
    auto it = index.patients.find(order[cut]);
    if (it == index.patients.end())
      fail(ErrorCode::internal, "split order names unknown patient '" + order[cut] + "'");
    train_images += it->second.size();
    ++cut;
  }
  if (cut == order.size()) {
    --cut;
    train_images -= index.patients.at(order[cut]).size();
    split.warnings.push_back(
        "greedy assignment would leave the test side empty; patient '" + order[cut] +
        "' moved to test, achieved training fraction " +
        std::to_string(static_cast<double>(train_images) / static_cast<double>(total_images)));
  }

  split.train_patients.assign(order.begin(), order.begin() + cut);
  split.test_patients.assign(order.begin() + cut, order.end());
  std::sort(split.train_patients.begin(), split.train_patients.end());
  std::sort(split.test_patients.begin(), split.test_patients.end());
  return split;
}

SplitSpec patient_exclusive_split(const DatasetIndex& index, double train_fraction,
                                  std::uint64_t seed) {
  std::vector<std::string> order;
  for (const auto& [id, recs] : index.patients) order.push_back(id);
  Rng rng(Rng::derive(seed, 0x5b17, 0));
  shuffle(order, rng);
  SplitSpec split = split_from_order(index, order, train_fraction);
  split.seed = seed;
  return split;
}

void validate_split(const DatasetIndex& index, const SplitSpec& split) {
  std::map<std::string, int> seen;
  for (const auto& p : split.train_patients) ++seen[p];
  for (const auto& p : split.test_patients) ++seen[p];
  for (const auto& [id, count] : seen) {
    if (count > 1) fail(ErrorCode::data, "patient '" + id + "' appears on both split sides");
    if (index.patients.find(id) == index.patients.end())
      fail(ErrorCode::data, "split names patient '" + id + "' that is not in the index");
  }
  for (const auto& [id, recs] : index.patients)
    if (seen.find(id) == seen.end())
      fail(ErrorCode::data, "patient '" + id + "' is missing from the split");
  if (split.train_patients.empty() || split.test_patients.empty())
    fail(ErrorCode::data, "both split sides must be nonempty");
}

std::vector<std::size_t> split_records(const DatasetIndex& index, const SplitSpec& split,
                                       bool test_side) {
  const auto& ids = test_side ? split.test_patients : split.train_patients;
  std::vector<bool> keep(index.records.size(), false);
  for (const auto& id : ids) {
    auto it = index.patients.find(id);
    if (it == index.patients.end())
      fail(ErrorCode::data, "split names patient '" + id + "' that is not in the index");
    for (std::size_t idx : it->second) keep[idx] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

std::string split_to_json_text(const SplitSpec& split) {
  json j;
  j["seed"] = split.seed;
  j["train_fraction"] = split.train_fraction;
  j["train_patients"] = split.train_patients;
  j["test_patients"] = split.test_patients;
  if (!split.warnings.empty()) j["warnings"] = split.warnings;
  return j.dump(2) + "\n";
}

SplitSpec split_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("split JSON parse error: ") + e.what());
  }
  SplitSpec split;
  try {
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train_fraction = j.at("train_fraction").get<double>();
    split.train_patients = j.at("train_patients").get<std::vector<std::string>>();
    split.test_patients = j.at("test_patients").get<std::vector<std::string>>();
    if (j.contains("warnings")) split.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("split JSON missing field: ") + e.what());
  }
  return split;
}

Tensor load_image(const SampleRecord& record, std::size_t target_h, std::size_t target_w) {
  Tensor img = read_png(record.path);
  if (img.extent(0) == target_h && img.extent(1) == target_w) return img;
  return resize_bilinear(img, target_h, target_w);
}

}  // namespace histoconv

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "histoconv/tensor.hpp"

namespace histoconv {

enum class BinaryClass { benign, malignant };

enum class Subtype {
  adenosis,
  fibroadenoma,
  phyllodes_tumor,
  tubular_adenoma,
  ductal_carcinoma,
  lobular_carcinoma,
  mucinous_carcinoma,
  papillary_carcinoma
};

const char* binary_class_name(BinaryClass c);
const char* subtype_name(Subtype s);
const char* subtype_code(Subtype s);  // filename code: A, F, PT, TA, DC, LC, MC, PC
BinaryClass subtype_class(Subtype s);

// Index into five_class_names(): all benign subtypes collapse to Benign (0);
// the malignant subtypes keep their own labels (1..4).
std::size_t subtype_five_class(Subtype s);

// One image parsed from the METHOD_CLASS_SUBTYPE-YEAR-SLIDE-MAG-SEQ.png
// convention. The patient (slide) identifier is the SUBTYPE-YEAR-SLIDE
// triple. `method` and `seq_width` only exist so filenames re-serialize
// exactly; they are not part of the index file format.
struct SampleRecord {
  std::string path;
  std::string method;
  BinaryClass binary_class = BinaryClass::benign;
  Subtype subtype = Subtype::adenosis;
  std::size_t five_class = 0;
  int magnification = 0;
  std::string patient_id;
  int seq = 0;
  int seq_width = 3;
};

// Parses a bare filename or a path (only the basename is considered).
// Malformed names raise a data error naming the failing segment.
SampleRecord parse_filename(const std::string& name);

// Inverse of parse_filename, reconstructing the basename from the fields.
std::string record_filename(const SampleRecord& r);

struct MagnificationCounts {
  std::uint64_t benign = 0;
  std::uint64_t malignant = 0;
  std::uint64_t total() const { return benign + malignant; }
};

struct DatasetIndex {
  std::vector<SampleRecord> records;  // sorted by path
  std::map<std::string, std::vector<std::size_t>> patients;

  std::map<int, MagnificationCounts> counts_by_magnification() const;
  MagnificationCounts totals() const;
};

struct IndexBuild {
  DatasetIndex index;
  std::vector<std::string> skipped;  // PNG files whose names did not parse, with reasons
};

// Recursively indexes every *.png under root (sorted by path, so traversal
// order never matters). Files with unparseable names are listed in `skipped`;
// an empty result is an error.
IndexBuild build_index(const std::string& root);

// Census-style summary (magnification rows, benign/malignant/total columns).
std::string summary_table(const DatasetIndex& index);

std::string index_to_json_text(const DatasetIndex& index);
DatasetIndex index_from_json_text(const std::string& text);

// Published census of the BreakHis 1.0 corpus as printed in the source
// report, kept verbatim including its typos so the consistency checker can
// call them out. `claimed_image_count` is the prose figure, which disagrees
// with the table's grand total.
struct CensusRow {
  int magnification = 0;
  std::uint64_t benign = 0;
  std::uint64_t malignant = 0;
  std::uint64_t printed_total = 0;
};

struct Census {
  std::vector<CensusRow> rows;
  std::uint64_t printed_benign_total = 0;
  std::uint64_t printed_malignant_total = 0;
  std::uint64_t printed_grand_total = 0;
  std::uint64_t claimed_image_count = 0;
  std::uint64_t claimed_patient_count = 0;
};

const Census& breakhis_census();

// Internal-consistency notes for a census: rows whose benign + malignant sum
// disagrees with the printed row total, column sums that disagree with the
// printed totals, and a prose image count that disagrees with the table.
std::vector<std::string> check_census(const Census& census);

// Differences between an indexed corpus and a census (per magnification and
// in total). Empty means the corpus matches the printed table exactly.
std::vector<std::string> compare_with_census(const DatasetIndex& index, const Census& census);

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  std::vector<std::string> train_patients;  // sorted
  std::vector<std::string> test_patients;   // sorted
  std::vector<std::string> warnings;
};

// Shuffles the patient list by seed, then assigns patients to the training
// side until the training image count first reaches train_fraction of all
// images; the rest go to the test side. If that would leave the test side
// empty, the last-added patient moves back to test and a warning records the
// achieved fraction. No patient ever appears on both sides.
SplitSpec patient_exclusive_split(const DatasetIndex& index, double train_fraction,
                                  std::uint64_t seed);

// Deterministic core of the split given an explicit patient order (exposed so
// the greedy-stop property can be checked over exhaustive permutations).
SplitSpec split_from_order(const DatasetIndex& index, const std::vector<std::string>& order,
                           double train_fraction);

// Rejects overlapping sides, unknown patients, and patients missing from both
// sides (guards hand-edited split files).
void validate_split(const DatasetIndex& index, const SplitSpec& split);

// Record indices belonging to one side, in index order.
std::vector<std::size_t> split_records(const DatasetIndex& index, const SplitSpec& split,
                                       bool test_side);

std::string split_to_json_text(const SplitSpec& split);
SplitSpec split_from_json_text(const std::string& text);

// Decode + bilinear-resize one record's image to target extents, values in
// [0, 1].
Tensor load_image(const SampleRecord& record, std::size_t target_h, std::size_t target_w);

}  // namespace histoconv

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace histoconv {

// One row of the per-class block. A `*_defined` flag is false when the
// metric's denominator was zero (class never predicted, absent, or both); the
// value is then reported as 0 instead of NaN so tiny runs stay printable.
struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<std::uint64_t> confusion;  // C x C row-major, rows are true classes
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::uint64_t total_support = 0;

  std::size_t num_classes() const { return class_names.size(); }
  std::uint64_t confusion_at(std::size_t t, std::size_t p) const {
    return confusion[t * class_names.size() + p];
  }
};

// Macro/weighted averages computed from already-known per-class rows. The
// accuracy field is the support-weighted recall, which coincides with
// trace/total when the rows come from a confusion matrix.
struct Aggregates {
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::uint64_t total_support = 0;
};

Aggregates aggregate_rows(const std::vector<double>& precision, const std::vector<double>& recall,
                          const std::vector<double>& f1,
                          const std::vector<std::uint64_t>& support);

// Full report from a C x C count matrix (rows true, columns predicted).
// Errors if the matrix is empty, non-square against the names, or all zero.
MetricsReport compute_metrics(const std::vector<std::uint64_t>& confusion,
                              const std::vector<std::string>& class_names);

// Tally helper for evaluation: labels and predictions are class indices.
std::vector<std::uint64_t> confusion_from_predictions(const std::vector<std::size_t>& truth,
                                                      const std::vector<std::size_t>& predicted,
                                                      std::size_t num_classes);

const std::vector<std::string>& five_class_names();

// Two-decimal printing rounds half away from zero (0.885 -> 0.89).
double round_half_up(double v, int decimals);

// Plain-text classification report: per-class block, then accuracy, macro avg
// and weighted avg rows. Values printed at two decimals, half-up.
std::string metrics_table(const MetricsReport& report);

// Full-precision JSON round trip (used by the eval command).
std::string metrics_to_json_text(const MetricsReport& report);
MetricsReport metrics_from_json_text(const std::string& text);

}  // namespace histoconv

#include "histoconv/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histoconv/error.hpp"

namespace histoconv {

using nlohmann::json;

const std::vector<std::string>& five_class_names() {
  static const std::vector<std::string> names = {
      "Benign", "Ductal_Carcinoma", "Lobular_Carcinoma", "Mucinous_Carcinoma",
      "Papillary_Carcinoma"};
  return names;
}

double round_half_up(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(v * scale + 0.5) / scale;
}

Aggregates aggregate_rows(const std::vector<double>& precision, const std::vector<double>& recall,
                          const std::vector<double>& f1,
                          const std::vector<std::uint64_t>& support) {
  const std::size_t c = support.size();
  if (c == 0 || precision.size() != c || recall.size() != c || f1.size() != c)
    fail(ErrorCode::internal, "aggregate_rows: mismatched per-class row lengths");
  Aggregates a;
  for (std::size_t i = 0; i < c; ++i) a.total_support += support[i];
  if (a.total_support == 0) fail(ErrorCode::data, "aggregate_rows: total support is zero");
  const double n = static_cast<double>(c);
  const double total = static_cast<double>(a.total_support);
  for (std::size_t i = 0; i < c; ++i) {
    const double s = static_cast<double>(support[i]);
    a.macro_precision += precision[i] / n;
    a.macro_recall += recall[i] / n;
    a.macro_f1 += f1[i] / n;
    a.weighted_precision += precision[i] * s / total;
    a.weighted_recall += recall[i] * s / total;
    a.weighted_f1 += f1[i] * s / total;
  }
  a.accuracy = a.weighted_recall;
  return a;
}

MetricsReport compute_metrics(const std::vector<std::uint64_t>& confusion,
                              const std::vector<std::string>& class_names) {
  const std::size_t c = class_names.size();
  if (c == 0) fail(ErrorCode::internal, "compute_metrics: no class names");
  if (confusion.size() != c * c)
    fail(ErrorCode::internal, "compute_metrics: expected " + std::to_string(c * c) +
                                  " confusion entries, got " + std::to_string(confusion.size()));

  MetricsReport r;
  r.class_names = class_names;
  r.confusion = confusion;

  std::uint64_t total = 0, trace = 0;
  for (std::size_t t = 0; t < c; ++t)
    for (std::size_t p = 0; p < c; ++p) total += confusion[t * c + p];
  if (total == 0) fail(ErrorCode::data, "compute_metrics: confusion matrix is all zero");

  std::vector<double> prec(c), rec(c), f1(c);
  std::vector<std::uint64_t> supp(c);
  for (std::size_t i = 0; i < c; ++i) {
    const std::uint64_t tp = confusion[i * c + i];
    std::uint64_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row_sum += confusion[i * c + j];
      col_sum += confusion[j * c + i];
    }
    trace += tp;
    ClassMetrics m;
    m.name = class_names[i];
    m.support = row_sum;
    m.precision_defined = col_sum > 0;
    m.precision = m.precision_defined ? static_cast<double>(tp) / static_cast<double>(col_sum) : 0.0;
    m.recall_defined = row_sum > 0;
    m.recall = m.recall_defined ? static_cast<double>(tp) / static_cast<double>(row_sum) : 0.0;
    m.f1_defined = m.precision + m.recall > 0.0;
    m.f1 = m.f1_defined ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    prec[i] = m.precision;
    rec[i] = m.recall;
    f1[i] = m.f1;
    supp[i] = m.support;
    r.per_class.push_back(std::move(m));
  }

  const Aggregates a = aggregate_rows(prec, rec, f1, supp);
  r.macro_precision = a.macro_precision;
  r.macro_recall = a.macro_recall;
  r.macro_f1 = a.macro_f1;
  r.weighted_precision = a.weighted_precision;
  r.weighted_recall = a.weighted_recall;
  r.weighted_f1 = a.weighted_f1;
  r.total_support = total;
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  // With one label per sample the support-weighted recall is trace/total.
  // Taking it straight from the counts keeps the two fields bit-identical
  // instead of differing by rounding in the sum of recall_i * support_i.
  r.weighted_recall = r.accuracy;
  return r;
}

std::vector<std::uint64_t> confusion_from_predictions(const std::vector<std::size_t>& truth,
                                                      const std::vector<std::size_t>& predicted,
                                                      std::size_t num_classes) {
  if (truth.size() != predicted.size())
    fail(ErrorCode::internal, "confusion_from_predictions: length mismatch");
  std::vector<std::uint64_t> conf(num_classes * num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes)
      fail(ErrorCode::internal, "confusion_from_predictions: class index out of range at sample " +
                                    std::to_string(i));
    ++conf[truth[i] * num_classes + predicted[i]];
  }
  return conf;
}

namespace {

std::string fmt2(double v, bool defined) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", round_half_up(v, 2));
  std::string s(buf);
  if (!defined) s += "*";
  return s;
}

void pad_left(std::ostringstream& out, const std::string& s, std::size_t width) {
  for (std::size_t i = s.size(); i < width; ++i) out << ' ';
  out << s;
}

}  // namespace

std::string metrics_table(const MetricsReport& report) {
  std::size_t name_w = std::string("weighted avg").size();
  for (const auto& m : report.per_class) name_w = std::max(name_w, m.name.size());

  std::ostringstream out;
  bool any_flag = false;
  const std::size_t col = 10;

  pad_left(out, "", name_w);
  for (const char* h : {"precision", "recall", "f1-score", "support"}) pad_left(out, h, col);
  out << "\n\n";

  for (const auto& m : report.per_class) {
    pad_left(out, m.name, name_w);
    pad_left(out, fmt2(m.precision, m.precision_defined), col);
    pad_left(out, fmt2(m.recall, m.recall_defined), col);
    pad_left(out, fmt2(m.f1, m.f1_defined), col);
    pad_left(out, std::to_string(m.support), col);
    out << '\n';
    any_flag = any_flag || !m.precision_defined || !m.recall_defined || !m.f1_defined;
  }
  out << '\n';

  pad_left(out, "accuracy", name_w);
  pad_left(out, "", col);
  pad_left(out, "", col);
  pad_left(out, fmt2(report.accuracy, true), col);
  pad_left(out, std::to_string(report.total_support), col);
  out << '\n';

  pad_left(out, "macro avg", name_w);
  pad_left(out, fmt2(report.macro_precision, true), col);
  pad_left(out, fmt2(report.macro_recall, true), col);
  pad_left(out, fmt2(report.macro_f1, true), col);
  pad_left(out, std::to_string(report.total_support), col);
  out << '\n';

  pad_left(out, "weighted avg", name_w);
  pad_left(out, fmt2(report.weighted_precision, true), col);
  pad_left(out, fmt2(report.weighted_recall, true), col);
  pad_left(out, fmt2(report.weighted_f1, true), col);
  pad_left(out, std::to_string(report.total_support), col);
  out << '\n';

  if (any_flag) out << "\n* zero denominator, metric reported as 0\n";
  return out.str();
}

std::string metrics_to_json_text(const MetricsReport& r) {
  json j;
  j["class_names"] = r.class_names;
  j["confusion"] = r.confusion;
  json per = json::array();
  for (const auto& m : r.per_class) {
    per.push_back({{"name", m.name},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support},
                   {"precision_defined", m.precision_defined},
                   {"recall_defined", m.recall_defined},
                   {"f1_defined", m.f1_defined}});
  }
  j["per_class"] = per;
  j["accuracy"] = r.accuracy;
  j["macro_avg"] = {{"precision", r.macro_precision},
                    {"recall", r.macro_recall},
                    {"f1", r.macro_f1}};
  j["weighted_avg"] = {{"precision", r.weighted_precision},
                       {"recall", r.weighted_recall},
                       {"f1", r.weighted_f1}};
  j["total_support"] = r.total_support;
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("metrics JSON parse error: ") + e.what());
  }
  try {
    MetricsReport r;
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    r.confusion = j.at("confusion").get<std::vector<std::uint64_t>>();
    for (const auto& p : j.at("per_class")) {
      ClassMetrics m;
      m.name = p.at("name").get<std::string>();
      m.precision = p.at("precision").get<double>();
      m.recall = p.at("recall").get<double>();
      m.f1 = p.at("f1").get<double>();
      m.support = p.at("support").get<std::uint64_t>();
      m.precision_defined = p.at("precision_defined").get<bool>();
      m.recall_defined = p.at("recall_defined").get<bool>();
      m.f1_defined = p.at("f1_defined").get<bool>();
      r.per_class.push_back(std::move(m));
    }
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro_avg").at("precision").get<double>();
    r.macro_recall = j.at("macro_avg").at("recall").get<double>();
    r.macro_f1 = j.at("macro_avg").at("f1").get<double>();
    r.weighted_precision = j.at("weighted_avg").at("precision").get<double>();
    r.weighted_recall = j.at("weighted_avg").at("recall").get<double>();
    r.weighted_f1 = j.at("weighted_avg").at("f1").get<double>();
    r.total_support = j.at("total_support").get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("metrics JSON missing field: ") + e.what());
  }
}

}  // namespace histoconv

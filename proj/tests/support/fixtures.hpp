// Shared test fixtures: temp directories, synthetic corpora on disk,
// in-memory dataset indexes, and the procedural texture sets the learning
// tests train on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "histoconv/dataset.hpp"
#include "histoconv/image_io.hpp"
#include "histoconv/rng.hpp"
#include "histoconv/train.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Scratch directories and small file helpers
// ---------------------------------------------------------------------------

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("histoconv_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void touch(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary).put('\0');
}

// ---------------------------------------------------------------------------
// In-memory dataset indexes
// ---------------------------------------------------------------------------

inline histoconv::DatasetIndex index_from_records(std::vector<histoconv::SampleRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  histoconv::DatasetIndex idx;
  idx.records = std::move(records);
  for (std::size_t i = 0; i < idx.records.size(); ++i)
    idx.patients[idx.records[i].patient_id].push_back(i);
  return idx;
}

// One record built by round-tripping a constructed filename through the
// parser, so fixture records always agree with the naming convention.
inline histoconv::SampleRecord make_record(const std::string& subtype_code,
                                           const std::string& slide, int mag, int seq,
                                           const std::string& dir = "") {
  char name[128];
  std::snprintf(name, sizeof(name), "SOB_%s_%s-14-%s-%d-%03d.png",
                (subtype_code == "A" || subtype_code == "F" || subtype_code == "PT" ||
                 subtype_code == "TA")
                    ? "B"
                    : "M",
                subtype_code.c_str(), slide.c_str(), mag, seq);
  histoconv::SampleRecord r = histoconv::parse_filename(name);
  r.path = dir.empty() ? std::string(name) : dir + "/" + name;
  return r;
}

// n_patients patients of one benign subtype, images_per_patient images each,
// all at 40X. Handy for exact split-arithmetic checks.
inline histoconv::DatasetIndex make_uniform_index(std::size_t n_patients,
                                                  std::size_t images_per_patient) {
  std::vector<histoconv::SampleRecord> recs;
  for (std::size_t p = 0; p < n_patients; ++p)
    for (std::size_t i = 0; i < images_per_patient; ++i)
      recs.push_back(make_record("TA", "P" + std::to_string(100 + p), 40,
                                 static_cast<int>(i + 1)));
  return index_from_records(std::move(recs));
}

// An index with one patient per given image count (patient k holds counts[k]
// images), used for the greedy-split permutation checks.
inline histoconv::DatasetIndex make_skewed_index(const std::vector<std::size_t>& counts) {
  std::vector<histoconv::SampleRecord> recs;
  for (std::size_t p = 0; p < counts.size(); ++p)
    for (std::size_t i = 0; i < counts[p]; ++i)
      recs.push_back(make_record("DC", "S" + std::to_string(200 + p), 100,
                                 static_cast<int>(i + 1)));
  return index_from_records(std::move(recs));
}

// ---------------------------------------------------------------------------
// On-disk corpora
// ---------------------------------------------------------------------------

struct CorpusOnDisk {
  std::map<int, histoconv::MagnificationCounts> by_mag;
  std::map<std::string, std::size_t> patients_per_subtype;
  std::size_t total_images = 0;
  std::size_t total_patients = 0;
};

// Mirrors the published patient structure (24 benign / 58 malignant patients
// across the eight subtypes), with one to three images per patient and
// magnification. Files are empty placeholders; indexing only reads names.
inline CorpusOnDisk build_breakhis_corpus(const fs::path& root) {
  struct Row {
    const char* code;
    const char* cls;
    const char* subdir;
    std::size_t patients;
  };
  const Row rows[] = {
      {"A", "benign", "adenosis", 4},          {"F", "benign", "fibroadenoma", 10},
      {"PT", "benign", "phyllodes_tumor", 3},  {"TA", "benign", "tubular_adenoma", 7},
      {"DC", "malignant", "ductal_carcinoma", 38}, {"LC", "malignant", "lobular_carcinoma", 5},
      {"MC", "malignant", "mucinous_carcinoma", 9}, {"PC", "malignant", "papillary_carcinoma", 6},
  };
  const int mags[] = {40, 100, 200, 400};
  CorpusOnDisk out;
  int slide = 1000;
  for (const Row& row : rows) {
    out.patients_per_subtype[row.code] = row.patients;
    out.total_patients += row.patients;
    for (std::size_t p = 0; p < row.patients; ++p, ++slide) {
      for (int mag : mags) {
        const std::size_t n = 1 + (static_cast<std::size_t>(slide) + static_cast<std::size_t>(mag) / 40) % 3;
        for (std::size_t s = 1; s <= n; ++s) {
          char name[128];
          std::snprintf(name, sizeof(name), "SOB_%s_%s-14-%d-%d-%03zu.png",
                        row.cls[0] == 'b' ? "B" : "M", row.code, slide, mag, s);
          touch(root / row.cls / row.subdir / ("SOB_" + std::to_string(slide)) /
                (std::to_string(mag) + "X") / name);
          auto& c = out.by_mag[mag];
          if (row.cls[0] == 'b')
            ++c.benign;
          else
            ++c.malignant;
          ++out.total_images;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedural texture images (five visually distinct classes)
// ---------------------------------------------------------------------------

// 0: horizontal stripes, 1: vertical stripes, 2: stripe product (plaid),
// 3: centered blob, 4: uniform noise. Grayscale replicated to 3 channels.
inline histoconv::Tensor make_texture_image(std::size_t cls, std::size_t hw, histoconv::Rng& rng) {
  const double pi = 3.14159265358979323846;
  histoconv::Tensor img({hw, hw, 3});
  const double f = static_cast<double>(1 + rng.below(3));  // 1..3 periods
  const double phase1 = rng.uniform(0.0, 2.0 * pi);
  const double phase2 = rng.uniform(0.0, 2.0 * pi);
  const double cy = rng.uniform(0.3, 0.7) * static_cast<double>(hw);
  const double cx = rng.uniform(0.3, 0.7) * static_cast<double>(hw);
  const double sigma = static_cast<double>(hw) / 5.0;
  for (std::size_t y = 0; y < hw; ++y)
    for (std::size_t x = 0; x < hw; ++x) {
      const double fy = 2.0 * pi * f * static_cast<double>(y) / static_cast<double>(hw);
      const double fx = 2.0 * pi * f * static_cast<double>(x) / static_cast<double>(hw);
      double v = 0.0;
      switch (cls) {
        case 0: v = 0.5 + 0.45 * std::sin(fy + phase1); break;
        case 1: v = 0.5 + 0.45 * std::sin(fx + phase1); break;
        case 2: v = 0.5 + 0.45 * std::sin(fy + phase1) * std::sin(fx + phase2); break;
        case 3: {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
          v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
          break;
        }
        default: v = rng.uniform(); break;
      }
      if (cls != 4) v += rng.uniform(-0.03, 0.03);
      v = std::clamp(v, 0.0, 1.0);
      const float fv = static_cast<float>(v);
      img.at(y, x, 0) = fv;
      img.at(y, x, 1) = fv;
      img.at(y, x, 2) = fv;
    }
  return img;
}

// n images cycling through the five classes, so any prefix split is close to
// stratified.
inline histoconv::LoadedSet make_texture_set(std::size_t n, std::size_t hw, std::uint64_t seed) {
  histoconv::Rng rng(seed);
  histoconv::LoadedSet set;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % 5;
    set.images.push_back(make_texture_image(cls, hw, rng));
    set.labels.push_back(cls);
  }
  return set;
}

// A smooth monotone ramp with all-distinct pixel values; any resampling
// displacement changes the value, which makes exact-match counting strict.
inline histoconv::Tensor make_gradient_image(std::size_t h, std::size_t w) {
  histoconv::Tensor img({h, w, 1});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      img.at(y, x, 0) =
          static_cast<float>(y * w + x) / static_cast<float>(h * w);
  return img;
}

// Small on-disk corpus with real PNG content for end-to-end CLI runs: one
// benign subtype plus the four malignant ones (all five labels present),
// textured per class so training has something to learn.
inline CorpusOnDisk build_textured_corpus(const fs::path& root, std::size_t patients_per_subtype,
                                          std::size_t images_per_patient, std::size_t hw,
                                          std::uint64_t seed = 7) {
  const char* codes[] = {"TA", "DC", "LC", "MC", "PC"};
  histoconv::Rng rng(seed);
  CorpusOnDisk out;
  int slide = 5000;
  for (std::size_t c = 0; c < 5; ++c) {
    out.patients_per_subtype[codes[c]] = patients_per_subtype;
    out.total_patients += patients_per_subtype;
    for (std::size_t p = 0; p < patients_per_subtype; ++p, ++slide) {
      for (std::size_t s = 1; s <= images_per_patient; ++s) {
        char name[128];
        std::snprintf(name, sizeof(name), "SOB_%s_%s-14-%d-40-%03zu.png", c == 0 ? "B" : "M",
                      codes[c], slide, s);
        const fs::path path = root / codes[c] / name;
        fs::create_directories(path.parent_path());
        histoconv::write_png(path.string(), make_texture_image(c, hw, rng));
        auto& cnt = out.by_mag[40];
        if (c == 0)
          ++cnt.benign;
        else
          ++cnt.malignant;
        ++out.total_images;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spawning the CLI (used by the end-to-end tests; path comes from the
// HISTOCONV_CLI environment variable set by CTest)
// ---------------------------------------------------------------------------

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

inline std::string cli_path() {
  const char* p = std::getenv("HISTOCONV_CLI");
  return p ? p : "";
}

inline CliResult run_cli(const std::string& args, const std::string& extra_env = "") {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() /
                        ("histoconv_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  const std::string out_file = base.string() + ".out", err_file = base.string() + ".err";
  std::string cmd;
  if (!extra_env.empty()) cmd += "env " + extra_env + " ";
  cmd += "\"" + cli_path() + "\" " + args + " >" + out_file + " 2>" + err_file;
  const int rc = std::system(cmd.c_str());
  CliResult r;
  r.status = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  std::error_code ec;
  fs::remove(out_file, ec);
  fs::remove(err_file, ec);
  return r;
}

}  // namespace fixtures

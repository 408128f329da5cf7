#include "histoconv/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "histoconv/error.hpp"

namespace histoconv {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'H', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxHeaderBytes = 16u << 20;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    fail(ErrorCode::data, "checkpoint '" + path + "': truncated " + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return {{"input_h", cfg.input_h},     {"input_w", cfg.input_w},
          {"channels", cfg.channels},   {"conv_filters", cfg.conv_filters},
          {"kernel", cfg.kernel},       {"dense_units", cfg.dense_units},
          {"dropout", cfg.dropout},     {"classes", cfg.classes}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  try {
    cfg.input_h = j.at("input_h").get<std::size_t>();
    cfg.input_w = j.at("input_w").get<std::size_t>();
    cfg.channels = j.at("channels").get<std::size_t>();
    cfg.conv_filters = j.at("conv_filters").get<std::vector<std::size_t>>();
    cfg.kernel = j.at("kernel").get<std::size_t>();
    cfg.dense_units = j.at("dense_units").get<std::size_t>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.classes = j.at("classes").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::data, std::string("model config JSON missing field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::string& path, Model<float>& model, std::uint64_t seed,
                     std::uint64_t epoch) {
  json manifest = json::array();
  for (std::size_t i = 0; i < model.params().size(); ++i)
    manifest.push_back({{"name", model.param_names()[i]},
                        {"shape", model.params()[i]->shape()}});
  json header;
  header["model"] = model_config_to_json(model.config());
  header["params"] = manifest;
  header["seed"] = seed;
  header["epoch"] = epoch;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::data, "cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const Tensor* p : model.params())
    out.write(reinterpret_cast<const char*>(p->data()),
              static_cast<std::streamsize>(p->size() * sizeof(float)));
  if (!out) fail(ErrorCode::data, "write error on checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorCode::data, "cannot open checkpoint '" + path + "'");
  const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::data, "checkpoint '" + path + "': bad magic");
  const std::uint32_t version = read_u32(in, path, "version field");
  if (version != kVersion)
    fail(ErrorCode::data, "checkpoint '" + path + "': unsupported version " +
                              std::to_string(version));
  const std::uint32_t header_len = read_u32(in, path, "header length field");
  if (header_len > kMaxHeaderBytes || 12 + static_cast<std::uint64_t>(header_len) > file_size)
    fail(ErrorCode::data, "checkpoint '" + path + "': header length " +
                              std::to_string(header_len) + " exceeds file size");

  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), header_len))
    fail(ErrorCode::data, "checkpoint '" + path + "': truncated header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::data, "checkpoint '" + path + "': header is not valid JSON: " + e.what());
  }

  ModelConfig cfg;
  std::uint64_t seed = 0, epoch = 0;
  json manifest;
  try {
    cfg = model_config_from_json(header.at("model"));
    manifest = header.at("params");
    seed = header.at("seed").get<std::uint64_t>();
    epoch = header.at("epoch").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::data, "checkpoint '" + path + "': header missing field: " + e.what());
  }

  Rng scratch_rng(0);
  LoadedCheckpoint out{Model<float>(cfg, scratch_rng), seed, epoch};

  if (manifest.size() != out.model.params().size())
    fail(ErrorCode::data, "checkpoint '" + path + "': manifest lists " +
                              std::to_string(manifest.size()) + " parameters, model has " +
                              std::to_string(out.model.params().size()));
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    std::string name;
    Shape shape;
    try {
      name = manifest[i].at("name").get<std::string>();
      shape = manifest[i].at("shape").get<Shape>();
    } catch (const json::exception& e) {
      fail(ErrorCode::data, "checkpoint '" + path + "': bad manifest entry: " + e.what());
    }
    if (name != out.model.param_names()[i] || shape != out.model.params()[i]->shape())
      fail(ErrorCode::data, "checkpoint '" + path + "': manifest entry '" + name +
                                "' does not match model parameter '" +
                                out.model.param_names()[i] + "' " +
                                shape_str(out.model.params()[i]->shape()));
    Tensor* p = out.model.params()[i];
    if (!in.read(reinterpret_cast<char*>(p->data()),
                 static_cast<std::streamsize>(p->size() * sizeof(float))))
      fail(ErrorCode::data, "checkpoint '" + path + "': truncated blob for '" + name + "'");
  }
  if (in.get() != std::ifstream::traits_type::eof())
    fail(ErrorCode::data, "checkpoint '" + path + "': trailing bytes after last parameter");
  return out;
}

}  // namespace histoconv

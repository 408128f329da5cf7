#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "histoconv/model.hpp"

namespace histoconv {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Checkpoint layout: magic "HCNN", little-endian u32 version (1), u32 JSON
// header length, the JSON header (model config, parameter manifest with
// shapes, seed, epoch), then each parameter tensor as raw little-endian
// float32 values in manifest order.
void save_checkpoint(const std::string& path, Model<float>& model, std::uint64_t seed,
                     std::uint64_t epoch);

struct LoadedCheckpoint {
  Model<float> model;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace histoconv

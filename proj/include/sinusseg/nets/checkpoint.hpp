#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sinusseg/nets/layers.hpp"

namespace sinusseg::nets {

/// Sidecar stored next to the parameter blob as <blob>.json.
struct CheckpointMeta {
  static constexpr int kFormatVersion = 1;
  int format_version = kFormatVersion;
  std::string kind;  // "teacher", "student", "refiner", ...
  nlohmann::json spec = nlohmann::json::object();
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string config_hash;
  std::string checkpoint_id;  // derived from the blob contents on save
  nlohmann::json extra = nlohmann::json::object();
};

using NamedStores = std::vector<std::pair<std::string, ParamStore*>>;

/// Writes every store's tensors (prefixed by the store name) to `blob` and
/// the metadata to `blob` + ".json". Returns the metadata as written.
CheckpointMeta save_checkpoint(const std::filesystem::path& blob, const NamedStores& stores, CheckpointMeta meta);

/// Loads parameters into stores with the same names and shapes.
CheckpointMeta load_checkpoint(const std::filesystem::path& blob, const NamedStores& stores);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& blob);

std::filesystem::path sidecar_path(const std::filesystem::path& blob);

}  // namespace sinusseg::nets

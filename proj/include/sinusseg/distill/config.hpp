#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "sinusseg/losses/losses.hpp"
#include "sinusseg/nets/models.hpp"
#include "sinusseg/refiner/refiner.hpp"

namespace sinusseg::distill {

struct PhaseFlags {
  bool use_unlabeled = true;
  bool use_kd = true;
  bool use_weighting = true;
  bool use_refiner = true;
  bool use_cbam = true;
  bool kd_on_unlabeled = false;  // also distill on unlabeled batches
  friend bool operator==(const PhaseFlags&, const PhaseFlags&) = default;
};

struct OptimizerSettings {
  std::string name = "adamw";
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
};

/// Phantom generation and split sizes used by the pipeline commands.
struct DataSettings {
  std::size_t phantom_count = 240;
  int image_size = 128;
  std::size_t labeled = 40;  // labeled share of the training split
  std::size_t val = 20;
  std::size_t test = 20;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSettings data;
  nets::BackboneSpec backbone;
  OptimizerSettings optimizer;
  int epochs = 10;
  int batch_size = 8;
  losses::LossParams loss;
  PhaseFlags flags;
  refiner::RefinerConfig refiner;  // lambda_cycle and seed are taken from loss and seed

  /// Raises a Config error naming the offending field.
  void validate() const;
  /// Refiner settings with the shared fields filled in.
  refiner::RefinerConfig refiner_config() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Reads a YAML config. Missing keys keep their defaults; unknown keys are a
/// Config error.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& yaml_text);
/// YAML rendering that load_run_config reads back to an equal config.
std::string dump_run_config(const RunConfig& c);

/// First 16 hex digits of SHA-256 over the canonical JSON form.
std::string config_hash(const RunConfig& c);

}  // namespace sinusseg::distill

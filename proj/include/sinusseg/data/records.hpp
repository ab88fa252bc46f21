#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sinusseg::data {

enum class Split { Train, Val, Test };
enum class Sex { Female, Male, Other };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// Clinical metadata carried by the annotation export. Every field is optional.
struct SampleMetadata {
  std::optional<int> age;
  std::optional<Sex> sex;
  std::optional<std::string> acquisition_date;  // ISO-8601
  std::optional<bool> disease_present;

  friend bool operator==(const SampleMetadata&, const SampleMetadata&) = default;
};

struct SampleRecord {
  std::string image_id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;
  bool labeled = false;
  Split split = Split::Train;
  SampleMetadata metadata;

  /// labeled <=> mask_path; only training records may be unlabeled.
  void validate() const;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SplitCounts {
  std::size_t train_labeled = 0;
  std::size_t train_unlabeled = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  std::size_t total() const noexcept { return train_labeled + train_unlabeled + val + test; }
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct SplitManifest {
  std::vector<SampleRecord> records;
  SplitCounts counts;
  std::uint64_t seed = 0;

  static SplitCounts tally(const std::vector<SampleRecord>& records);

  /// Unique image ids, per-record invariants and counts == tally(records).
  void validate() const;

  std::vector<SampleRecord> select(Split split, std::optional<bool> labeled = std::nullopt) const;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

void to_json(nlohmann::json& j, const SampleMetadata& m);
void from_json(const nlohmann::json& j, SampleMetadata& m);
void to_json(nlohmann::json& j, const SampleRecord& r);
void from_json(const nlohmann::json& j, SampleRecord& r);
void to_json(nlohmann::json& j, const SplitManifest& m);
void from_json(const nlohmann::json& j, SplitManifest& m);

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

}  // namespace sinusseg::data

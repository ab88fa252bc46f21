#pragma once

#include <filesystem>
#include <string>

#include "sinusseg/distill/config.hpp"

namespace sinusseg::cli {

/// Layout: config.yaml, split.json, checkpoints/, pseudo_labels/,
/// refined_labels/, reports/, logs/. Phase completion is recorded as
/// logs/<phase>.stamp holding the config hash.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path config_path() const { return root_ / "config.yaml"; }
  std::filesystem::path split_path() const { return root_ / "split.json"; }
  std::filesystem::path checkpoints() const { return root_ / "checkpoints"; }
  std::filesystem::path pseudo_labels() const { return root_ / "pseudo_labels"; }
  std::filesystem::path refined_labels() const { return root_ / "refined_labels"; }
  std::filesystem::path reports() const { return root_ / "reports"; }
  std::filesystem::path logs() const { return root_ / "logs"; }

  void create_layout() const;

  /// Writes the snapshot when absent. A different existing snapshot is a
  /// Config error unless `force`, which replaces it.
  void bind_config(const distill::RunConfig& config, bool force) const;
  /// The snapshot; a Config error when there is none.
  distill::RunConfig load_config() const;

  bool is_stamped(const std::string& phase, const std::string& hash) const;
  void stamp(const std::string& phase, const std::string& hash) const;

  /// Config error naming `path` and the command that produces it.
  static void require(const std::filesystem::path& path, const std::string& what, const std::string& producer);

 private:
  std::filesystem::path root_;
};

}  // namespace sinusseg::cli

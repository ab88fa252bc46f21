#include "sinusseg/cli/run_dir.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sinusseg/core/error.hpp"

namespace sinusseg::cli {

RunDirectory::RunDirectory(std::filesystem::path root) : root_(std::filesystem::absolute(std::move(root))) {}

void RunDirectory::create_layout() const {
  std::error_code ec;
  for (const auto& dir : {root_, checkpoints(), pseudo_labels(), refined_labels(), reports(), logs()}) {
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  }
}

void RunDirectory::bind_config(const distill::RunConfig& config, bool force) const {
  create_layout();
  if (std::filesystem::exists(config_path())) {
    const auto existing = distill::load_run_config(config_path());
    if (distill::config_hash(existing) == distill::config_hash(config)) return;
    if (!force)
      raise(ErrorKind::Config, "run directory " + root_.string() + " already holds a different config (hash " +
                                   distill::config_hash(existing) + " vs " + distill::config_hash(config) +
                                   "); pass --force to replace it");
  }
  std::ofstream out(config_path());
  if (!out) raise(ErrorKind::Io, "cannot write " + config_path().string());
  out << "# config_hash: " << distill::config_hash(config) << "\n" << distill::dump_run_config(config);
}

distill::RunConfig RunDirectory::load_config() const {
  if (!std::filesystem::exists(config_path()))
    raise(ErrorKind::Config, "no config snapshot at " + config_path().string() + "; pass --config");
  return distill::load_run_config(config_path());
}

bool RunDirectory::is_stamped(const std::string& phase, const std::string& hash) const {
  std::ifstream in(logs() / (phase + ".stamp"));
  if (!in) return false;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  return j.value("config_hash", "") == hash;
}

void RunDirectory::stamp(const std::string& phase, const std::string& hash) const {
  std::ofstream out(logs() / (phase + ".stamp"));
  if (!out) raise(ErrorKind::Io, "cannot write stamp for " + phase);
  out << nlohmann::json{{"phase", phase}, {"config_hash", hash}}.dump(2) << '\n';
}

void RunDirectory::require(const std::filesystem::path& path, const std::string& what, const std::string& producer) {
  if (!std::filesystem::exists(path))
    raise(ErrorKind::Config, "missing " + what + " " + path.string() + " (run `" + producer + "` first)");
}

}  // namespace sinusseg::cli

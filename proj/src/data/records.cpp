#include "sinusseg/data/records.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sinusseg/core/error.hpp"

namespace sinusseg::data {

using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  raise(ErrorKind::Format, "unknown split '" + name + "'");
}

namespace {

std::string sex_to_string(Sex s) {
  switch (s) {
    case Sex::Female: return "F";
    case Sex::Male: return "M";
    case Sex::Other: return "O";
  }
  return "O";
}

Sex sex_from_string(const std::string& s) {
  if (s == "F") return Sex::Female;
  if (s == "M") return Sex::Male;
  return Sex::Other;
}

}  // namespace

void SampleRecord::validate() const {
  if (image_id.empty()) raise(ErrorKind::Format, "sample record without image_id");
  if (labeled != mask_path.has_value()) {
    raise(ErrorKind::Format, "record '" + image_id + "': labeled flag disagrees with mask_path presence");
  }
  if (!labeled && split != Split::Train) {
    raise(ErrorKind::Format, "record '" + image_id + "': " + to_string(split) + " records must be labeled");
  }
}

SplitCounts SplitManifest::tally(const std::vector<SampleRecord>& records) {
  SplitCounts c;
  for (const auto& r : records) {
    switch (r.split) {
      case Split::Train: (r.labeled ? c.train_labeled : c.train_unlabeled)++; break;
      case Split::Val: c.val++; break;
      case Split::Test: c.test++; break;
    }
  }
  return c;
}

void SplitManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    r.validate();
    if (!seen.insert(r.image_id).second) raise(ErrorKind::Format, "duplicate image_id '" + r.image_id + "' in manifest");
  }
  if (tally(records) != counts) raise(ErrorKind::Format, "manifest counts do not match its records");
}

std::vector<SampleRecord> SplitManifest::select(Split split, std::optional<bool> labeled) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (r.split == split && (!labeled || r.labeled == *labeled)) out.push_back(r);
  }
  return out;
}

void to_json(json& j, const SampleMetadata& m) {
  j = json::object();
  j["age"] = m.age ? json(*m.age) : json(nullptr);
  j["sex"] = m.sex ? json(sex_to_string(*m.sex)) : json(nullptr);
  j["acquisition_date"] = m.acquisition_date ? json(*m.acquisition_date) : json(nullptr);
  j["disease_present"] = m.disease_present ? json(*m.disease_present) : json(nullptr);
}

void from_json(const json& j, SampleMetadata& m) {
  m = {};
  if (j.contains("age") && !j["age"].is_null()) m.age = j["age"].get<int>();
  if (j.contains("sex") && !j["sex"].is_null()) m.sex = sex_from_string(j["sex"].get<std::string>());
  if (j.contains("acquisition_date") && !j["acquisition_date"].is_null())
    m.acquisition_date = j["acquisition_date"].get<std::string>();
  if (j.contains("disease_present") && !j["disease_present"].is_null())
    m.disease_present = j["disease_present"].get<bool>();
}

void to_json(json& j, const SampleRecord& r) {
  j = json{{"image_id", r.image_id},
           {"image_path", r.image_path.generic_string()},
           {"mask_path", r.mask_path ? json(r.mask_path->generic_string()) : json(nullptr)},
           {"labeled", r.labeled},
           {"split", to_string(r.split)},
           {"metadata", r.metadata}};
}

void from_json(const json& j, SampleRecord& r) {
  r.image_id = j.at("image_id").get<std::string>();
  r.image_path = j.at("image_path").get<std::string>();
  r.mask_path.reset();
  if (j.contains("mask_path") && !j["mask_path"].is_null()) r.mask_path = j["mask_path"].get<std::string>();
  r.labeled = j.at("labeled").get<bool>();
  r.split = split_from_string(j.at("split").get<std::string>());
  r.metadata = j.contains("metadata") ? j["metadata"].get<SampleMetadata>() : SampleMetadata{};
}

void to_json(json& j, const SplitManifest& m) {
  j = json{{"seed", m.seed},
           {"counts",
            {{"train_labeled", m.counts.train_labeled},
             {"train_unlabeled", m.counts.train_unlabeled},
             {"val", m.counts.val},
             {"test", m.counts.test}}},
           {"records", m.records}};
}

void from_json(const json& j, SplitManifest& m) {
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& c = j.at("counts");
  m.counts = {c.at("train_labeled").get<std::size_t>(), c.at("train_unlabeled").get<std::size_t>(),
              c.at("val").get<std::size_t>(), c.at("test").get<std::size_t>()};
  m.records = j.at("records").get<std::vector<SampleRecord>>();
}

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write manifest " + path.string());
  out << json(manifest).dump(2) << '\n';
  if (!out) raise(ErrorKind::Io, "failed writing manifest " + path.string());
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot open manifest " + path.string());
  SplitManifest m;
  try {
    m = json::parse(in).get<SplitManifest>();
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, "manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

}  // namespace sinusseg::data

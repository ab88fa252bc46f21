#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sinusseg/data/records.hpp"

namespace sinusseg::data {

struct Vertex {
  double x = 0.0;  // column, pixels
  double y = 0.0;  // row, pixels
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct PolygonAnnotation {
  std::string image_id;
  std::vector<Vertex> vertices;
  std::map<std::string, std::string> region_attributes;
};

struct ViaAnnotations {
  std::vector<PolygonAnnotation> polygons;
  /// image_id -> metadata for every image row that carried file attributes.
  std::map<std::string, SampleMetadata> metadata;
  /// image_id -> original filename column value, for every image listed.
  std::map<std::string, std::string> filenames;
  std::vector<std::string> warnings;
};

/// Parse a VIA 2.x CSV export (filename, file_size, file_attributes,
/// region_count, region_id, region_shape_attributes, region_attributes).
/// Only "polygon" regions are kept; other shapes are skipped with a warning.
/// image_id is the filename without its extension.
ViaAnnotations parse_via_csv(const std::filesystem::path& csv_path);

/// Same, from in-memory text. `source` names the input in error messages.
ViaAnnotations parse_via_csv_text(const std::string& text, const std::string& source = "<memory>");

/// Map a file_attributes JSON object onto metadata. Keys match
/// case-insensitively; unknown keys are ignored and unparseable values are
/// reported through `warnings` and left empty.
SampleMetadata metadata_from_attributes(const std::string& file_attributes_json, std::vector<std::string>& warnings);

}  // namespace sinusseg::data

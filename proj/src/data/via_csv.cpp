#include "sinusseg/data/via_csv.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sinusseg/core/error.hpp"

namespace sinusseg::data {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 7> kViaColumns{"filename",    "file_size",
                                                 "file_attributes", "region_count",
                                                 "region_id",   "region_shape_attributes",
                                                 "region_attributes"};

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRecord> split_csv(const std::string& text, const std::string& source) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  std::size_t i = 0;
  if (text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;  // UTF-8 BOM
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) {
          raise(ErrorKind::Row, source + ":" + std::to_string(line) + ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
        break;
    }
  }
  if (in_quotes) raise(ErrorKind::Row, source + ":" + std::to_string(current.line) + ": unterminated quoted field");
  if (field_started || !field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string normalize_key(const std::string& key) {
  std::string out;
  for (unsigned char c : trim(key)) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return trim(v.get<std::string>());
  if (v.is_null()) return {};
  return v.dump();
}

std::string stem_of(const std::string& filename) {
  return std::filesystem::path(filename).stem().string();
}

std::vector<double> coordinate_list(const json& shape, const char* key) {
  if (!shape.contains(key) || !shape[key].is_array()) {
    raise(ErrorKind::Row, std::string("polygon is missing numeric array '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& v : shape[key]) {
    if (!v.is_number()) raise(ErrorKind::Row, std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

SampleMetadata metadata_from_attributes(const std::string& file_attributes_json, std::vector<std::string>& warnings) {
  SampleMetadata meta;
  const std::string text = trim(file_attributes_json);
  if (text.empty()) return meta;
  json attrs;
  try {
    attrs = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, std::string("file_attributes is not valid JSON: ") + e.what());
  }
  if (!attrs.is_object()) raise(ErrorKind::Format, "file_attributes must be a JSON object");

  for (const auto& [raw_key, value] : attrs.items()) {
    const std::string key = normalize_key(raw_key);
    const std::string v = scalar_text(value);
    if (v.empty()) continue;
    if (key == "age" || key == "patient_age") {
      try {
        std::size_t used = 0;
        const int age = std::stoi(v, &used);
        if (used != v.size() || age < 0) throw std::invalid_argument(v);
        meta.age = age;
      } catch (const std::exception&) {
        warnings.push_back("unparseable age '" + v + "'");
      }
    } else if (key == "sex" || key == "gender") {
      const std::string s = lower(v);
      if (s == "f" || s == "female") {
        meta.sex = Sex::Female;
      } else if (s == "m" || s == "male") {
        meta.sex = Sex::Male;
      } else {
        meta.sex = Sex::Other;
      }
    } else if (key == "acquisition_date" || key == "date" || key == "study_date" || key == "acquisitiondate") {
      meta.acquisition_date = v;
    } else if (key == "disease" || key == "disease_present" || key == "disease_presence" || key == "diseased") {
      const std::string s = lower(v);
      if (s == "1" || s == "true" || s == "yes" || s == "y" || s == "present") {
        meta.disease_present = true;
      } else if (s == "0" || s == "false" || s == "no" || s == "n" || s == "absent") {
        meta.disease_present = false;
      } else {
        warnings.push_back("unparseable disease flag '" + v + "'");
      }
    }
  }
  return meta;
}

ViaAnnotations parse_via_csv_text(const std::string& text, const std::string& source) {
  const auto rows = split_csv(text, source);
  if (rows.empty()) raise(ErrorKind::Format, source + ": missing header row");

  // Header: VIA sometimes prefixes the first column with '#'.
  std::vector<std::string> header;
  for (const auto& h : rows.front().fields) {
    std::string name = trim(h);
    if (!name.empty() && name.front() == '#') name.erase(0, 1);
    header.push_back(name);
  }
  std::array<std::size_t, kViaColumns.size()> col{};
  for (std::size_t c = 0; c < kViaColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kViaColumns[c]);
    if (it == header.end()) raise(ErrorKind::Format, source + ": missing header column '" + kViaColumns[c] + "'");
    col[c] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;

  ViaAnnotations out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = source + ":" + std::to_string(row.line);
    if (row.fields.size() < needed) {
      raise(ErrorKind::Row, where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(row.fields.size()));
    }
    const std::string filename = trim(row.fields[col[0]]);
    if (filename.empty()) raise(ErrorKind::Row, where + ": empty filename");
    const std::string id = stem_of(filename);
    out.filenames.emplace(id, filename);

    if (!out.metadata.contains(id)) {
      std::vector<std::string> meta_warnings;
      try {
        out.metadata.emplace(id, metadata_from_attributes(row.fields[col[2]], meta_warnings));
      } catch (const Error& e) {
        raise(ErrorKind::Row, where + ": " + e.what());
      }
      for (auto& w : meta_warnings) out.warnings.push_back(where + ": " + w);
    }

    const std::string shape_text = trim(row.fields[col[5]]);
    json shape;
    try {
      shape = shape_text.empty() ? json::object() : json::parse(shape_text);
    } catch (const json::exception& e) {
      raise(ErrorKind::Row, where + ": malformed region_shape_attributes JSON: " + e.what());
    }
    if (!shape.is_object()) raise(ErrorKind::Row, where + ": region_shape_attributes must be a JSON object");
    if (shape.empty()) continue;  // image row without regions

    const std::string shape_name = shape.value("name", std::string{});
    if (shape_name != "polygon") {
      out.warnings.push_back(where + ": skipped non-polygon region '" + shape_name + "' on " + filename);
      continue;
    }

    PolygonAnnotation poly;
    poly.image_id = id;
    try {
      const auto xs = coordinate_list(shape, "all_points_x");
      const auto ys = coordinate_list(shape, "all_points_y");
      if (xs.size() != ys.size()) raise(ErrorKind::Row, "all_points_x and all_points_y differ in length");
      for (std::size_t k = 0; k < xs.size(); ++k) poly.vertices.push_back({xs[k], ys[k]});
    } catch (const Error& e) {
      raise(ErrorKind::Row, where + ": " + e.what());
    }

    const std::string attr_text = trim(row.fields[col[6]]);
    if (!attr_text.empty()) {
      json attrs;
      try {
        attrs = json::parse(attr_text);
      } catch (const json::exception& e) {
        raise(ErrorKind::Row, where + ": malformed region_attributes JSON: " + e.what());
      }
      if (attrs.is_object()) {
        for (const auto& [k, v] : attrs.items()) poly.region_attributes[k] = scalar_text(v);
      }
    }
    out.polygons.push_back(std::move(poly));
  }

  if (out.polygons.empty()) raise(ErrorKind::Empty, source + ": no polygon regions found");
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  return out;
}

ViaAnnotations parse_via_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + csv_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_via_csv_text(buf.str(), csv_path.string());
}

}  // namespace sinusseg::data

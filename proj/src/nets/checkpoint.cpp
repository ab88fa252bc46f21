#include "sinusseg/nets/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "sinusseg/core/error.hpp"

namespace sinusseg::nets {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'G', 'P', 'A', 'R', 'M', '1'};

template <class T>
void put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) raise(ErrorKind::Format, path.string() + ": truncated checkpoint");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

std::string fnv_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& blob) {
  auto p = blob;
  p += ".json";
  return p;
}

CheckpointMeta save_checkpoint(const std::filesystem::path& blob, const NamedStores& stores, CheckpointMeta meta) {
  std::string bytes(kMagic, sizeof kMagic);
  std::uint32_t count = 0;
  for (const auto& [prefix, store] : stores) count += std::uint32_t(store->entries().size());
  put(bytes, count);
  nlohmann::json names = nlohmann::json::array();
  for (const auto& [prefix, store] : stores)
    for (const auto& [name, t] : store->entries()) {
      const std::string full = prefix + "." + name;
      put(bytes, std::uint32_t(full.size()));
      bytes += full;
      const Shape s = t.shape();
      for (int d : {s.n, s.c, s.h, s.w}) put(bytes, std::int32_t(d));
      bytes.append(reinterpret_cast<const char*>(t.data().data()), t.numel() * sizeof(float));
      names.push_back(full);
    }

  std::error_code ec;
  if (blob.has_parent_path()) std::filesystem::create_directories(blob.parent_path(), ec);
  {
    std::ofstream out(blob, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + blob.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  meta.format_version = CheckpointMeta::kFormatVersion;
  meta.checkpoint_id = fnv_hex(bytes);
  const nlohmann::json j = {{"format_version", meta.format_version},
                            {"kind", meta.kind},
                            {"spec", meta.spec},
                            {"seed", meta.seed},
                            {"epoch", meta.epoch},
                            {"config_hash", meta.config_hash},
                            {"checkpoint_id", meta.checkpoint_id},
                            {"parameters", names},
                            {"extra", meta.extra}};
  std::ofstream side(sidecar_path(blob));
  if (!side) raise(ErrorKind::Io, "cannot write " + sidecar_path(blob).string());
  side << j.dump(2) << '\n';
  return meta;
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& blob) {
  std::ifstream in(sidecar_path(blob));
  if (!in) raise(ErrorKind::Io, "missing checkpoint sidecar " + sidecar_path(blob).string());
  try {
    const auto j = nlohmann::json::parse(in);
    CheckpointMeta m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != CheckpointMeta::kFormatVersion)
      raise(ErrorKind::Format, sidecar_path(blob).string() + ": unsupported format_version " +
                                   std::to_string(m.format_version));
    m.kind = j.at("kind").get<std::string>();
    m.spec = j.at("spec");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epoch = j.at("epoch").get<int>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    m.extra = j.value("extra", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Format, sidecar_path(blob).string() + ": " + e.what());
  }
}

CheckpointMeta load_checkpoint(const std::filesystem::path& blob, const NamedStores& stores) {
  const auto meta = read_checkpoint_meta(blob);
  std::ifstream in(blob, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot read " + blob.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    raise(ErrorKind::Format, blob.string() + ": not a parameter checkpoint");

  std::map<std::string, Tensor> wanted;
  for (const auto& [prefix, store] : stores)
    for (const auto& [name, t] : store->entries()) wanted.emplace(prefix + "." + name, t);

  std::size_t pos = sizeof kMagic;
  const auto count = take<std::uint32_t>(bytes, pos, blob);
  if (count != wanted.size())
    raise(ErrorKind::Format, blob.string() + ": holds " + std::to_string(count) + " tensors, expected " +
                                 std::to_string(wanted.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(bytes, pos, blob);
    if (pos + len > bytes.size()) raise(ErrorKind::Format, blob.string() + ": truncated checkpoint");
    const std::string name = bytes.substr(pos, len);
    pos += len;
    Shape s;
    s.n = take<std::int32_t>(bytes, pos, blob);
    s.c = take<std::int32_t>(bytes, pos, blob);
    s.h = take<std::int32_t>(bytes, pos, blob);
    s.w = take<std::int32_t>(bytes, pos, blob);
    const auto it = wanted.find(name);
    if (it == wanted.end()) raise(ErrorKind::Format, blob.string() + ": unexpected tensor " + name);
    Tensor t = it->second;
    if (!(t.shape() == s))
      raise(ErrorKind::Format, blob.string() + ": " + name + " has shape " + s.str() + ", model expects " +
                                   t.shape().str());
    const std::size_t n = s.numel() * sizeof(float);
    if (pos + n > bytes.size()) raise(ErrorKind::Format, blob.string() + ": truncated checkpoint");
    std::memcpy(t.data().data(), bytes.data() + pos, n);
    pos += n;
  }
  return meta;
}

}  // namespace sinusseg::nets

#include "sinusseg/distill/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>
#include <yaml-cpp/yaml.h>

#include "sinusseg/core/error.hpp"

namespace sinusseg::distill {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) raise(ErrorKind::Config, "config section '" + section + "' must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      raise(ErrorKind::Config, "unknown config key '" + (section.empty() ? "" : section + ".") + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorKind::Config, "config key '" + section + "." + key + "' has the wrong type");
  }
}

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(yaml_to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i); ec == std::errc() && p == s.data() + s.size())
    return i;
  double d = 0;
  if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d); ec == std::errc() && p == s.data() + s.size())
    return d;
  return s;
}

void emit(YAML::Emitter& out, const json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (auto it = j.begin(); it != j.end(); ++it) {
      out << YAML::Key << it.key() << YAML::Value;
      emit(out, it.value());
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& e : j) emit(out, e);
    out << YAML::EndSeq;
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number()) {
    std::ostringstream s;
    s.precision(17);
    s << j.get<double>();
    std::string text = s.str();
    if (text.find_first_of(".eE") == std::string::npos) text += ".0";
    out << text;
  } else {
    out << YAML::DoubleQuoted << j.get<std::string>();
  }
}

}  // namespace

void RunConfig::validate() const {
  if (data.image_size < 64) raise(ErrorKind::Config, "data.image_size must be >= 64");
  if (data.val + data.test + data.labeled > data.phantom_count)
    raise(ErrorKind::Config, "data.labeled + data.val + data.test exceeds data.phantom_count");
  if (data.labeled == 0) raise(ErrorKind::Config, "data.labeled must be >= 1");
  backbone.validate();
  if (optimizer.name != "adamw")
    raise(ErrorKind::Config, "optimizer.name '" + optimizer.name + "' is not supported (only 'adamw')");
  if (!(optimizer.learning_rate > 0)) raise(ErrorKind::Config, "optimizer.learning_rate must be > 0");
  if (!(optimizer.weight_decay >= 0)) raise(ErrorKind::Config, "optimizer.weight_decay must be >= 0");
  if (epochs < 1) raise(ErrorKind::Config, "training.epochs must be >= 1");
  if (batch_size < 1) raise(ErrorKind::Config, "training.batch_size must be >= 1");
  loss.validate();
  refiner_config().validate();
}

refiner::RefinerConfig RunConfig::refiner_config() const {
  auto r = refiner;
  r.lambda_cycle = loss.lambda_cycle;
  r.seed = seed;
  if (!flags.use_cbam) r.correction.cbam_stages.clear();
  else if (r.correction.cbam_stages.empty()) r.correction.cbam_stages = {1, 2, 3};
  return r;
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"data",
            {{"phantom_count", c.data.phantom_count},
             {"image_size", c.data.image_size},
             {"labeled", c.data.labeled},
             {"val", c.data.val},
             {"test", c.data.test}}},
           {"model",
            {{"backbone", c.backbone.name},
             {"input_size", c.backbone.input_size},
             {"base_channels", c.backbone.base_channels},
             {"depth", c.backbone.depth}}},
           {"optimizer",
            {{"name", c.optimizer.name},
             {"learning_rate", c.optimizer.learning_rate},
             {"weight_decay", c.optimizer.weight_decay}}},
           {"training", {{"epochs", c.epochs}, {"batch_size", c.batch_size}}},
           {"loss",
            {{"alpha", c.loss.alpha},
             {"beta", c.loss.beta},
             {"lambda_cycle", c.loss.lambda_cycle},
             {"temperature", c.loss.temperature},
             {"tau", c.loss.tau},
             {"threshold", c.loss.threshold},
             {"dice_eps", c.loss.dice_eps}}},
           {"flags",
            {{"use_unlabeled", c.flags.use_unlabeled},
             {"use_kd", c.flags.use_kd},
             {"use_weighting", c.flags.use_weighting},
             {"use_refiner", c.flags.use_refiner},
             {"use_cbam", c.flags.use_cbam},
             {"kd_on_unlabeled", c.flags.kd_on_unlabeled}}},
           {"refiner",
            {{"resolution", c.refiner.resolution},
             {"epochs", c.refiner.epochs},
             {"batch_size", c.refiner.batch_size},
             {"learning_rate", c.refiner.optimizer.learning_rate},
             {"weight_decay", c.refiner.optimizer.weight_decay},
             {"generator_filters", c.refiner.generator.filters},
             {"generator_blocks", c.refiner.generator.residual_blocks},
             {"discriminator_filters", c.refiner.discriminator.filters},
             {"correction_channels", c.refiner.correction.base_channels},
             {"correction_residual", c.refiner.correction.residual},
             {"correction_skips", c.refiner.correction.skip_connections}}}};
}

void from_json(const json& j, RunConfig& c) {
  c = RunConfig{};
  if (j.is_null()) return;
  check_keys(j, "", {"seed", "data", "model", "optimizer", "training", "loss", "flags", "refiner"});
  read(j, "seed", c.seed, "");
  auto section = [&](const char* name, std::initializer_list<const char*> keys) -> json {
    if (!j.contains(name) || j.at(name).is_null()) return json::object();
    check_keys(j.at(name), name, keys);
    return j.at(name);
  };
  {
    const auto s = section("data", {"phantom_count", "image_size", "labeled", "val", "test"});
    read(s, "phantom_count", c.data.phantom_count, "data");
    read(s, "image_size", c.data.image_size, "data");
    read(s, "labeled", c.data.labeled, "data");
    read(s, "val", c.data.val, "data");
    read(s, "test", c.data.test, "data");
  }
  {
    const auto s = section("model", {"backbone", "input_size", "base_channels", "depth"});
    read(s, "backbone", c.backbone.name, "model");
    read(s, "input_size", c.backbone.input_size, "model");
    read(s, "base_channels", c.backbone.base_channels, "model");
    read(s, "depth", c.backbone.depth, "model");
  }
  {
    const auto s = section("optimizer", {"name", "learning_rate", "weight_decay"});
    read(s, "name", c.optimizer.name, "optimizer");
    read(s, "learning_rate", c.optimizer.learning_rate, "optimizer");
    read(s, "weight_decay", c.optimizer.weight_decay, "optimizer");
  }
  {
    const auto s = section("training", {"epochs", "batch_size"});
    read(s, "epochs", c.epochs, "training");
    read(s, "batch_size", c.batch_size, "training");
  }
  {
    const auto s = section("loss", {"alpha", "beta", "lambda_cycle", "temperature", "tau", "threshold", "dice_eps"});
    read(s, "alpha", c.loss.alpha, "loss");
    read(s, "beta", c.loss.beta, "loss");
    read(s, "lambda_cycle", c.loss.lambda_cycle, "loss");
    read(s, "temperature", c.loss.temperature, "loss");
    read(s, "tau", c.loss.tau, "loss");
    read(s, "threshold", c.loss.threshold, "loss");
    read(s, "dice_eps", c.loss.dice_eps, "loss");
  }
  {
    const auto s = section("flags", {"use_unlabeled", "use_kd", "use_weighting", "use_refiner", "use_cbam", "kd_on_unlabeled"});
    read(s, "use_unlabeled", c.flags.use_unlabeled, "flags");
    read(s, "use_kd", c.flags.use_kd, "flags");
    read(s, "use_weighting", c.flags.use_weighting, "flags");
    read(s, "use_refiner", c.flags.use_refiner, "flags");
    read(s, "use_cbam", c.flags.use_cbam, "flags");
    read(s, "kd_on_unlabeled", c.flags.kd_on_unlabeled, "flags");
  }
  {
    const auto s = section("refiner", {"resolution", "epochs", "batch_size", "learning_rate", "weight_decay",
                                       "generator_filters", "generator_blocks", "discriminator_filters",
                                       "correction_channels", "correction_residual", "correction_skips"});
    read(s, "resolution", c.refiner.resolution, "refiner");
    read(s, "epochs", c.refiner.epochs, "refiner");
    read(s, "batch_size", c.refiner.batch_size, "refiner");
    read(s, "learning_rate", c.refiner.optimizer.learning_rate, "refiner");
    read(s, "weight_decay", c.refiner.optimizer.weight_decay, "refiner");
    read(s, "generator_filters", c.refiner.generator.filters, "refiner");
    read(s, "generator_blocks", c.refiner.generator.residual_blocks, "refiner");
    read(s, "discriminator_filters", c.refiner.discriminator.filters, "refiner");
    read(s, "correction_channels", c.refiner.correction.base_channels, "refiner");
    read(s, "correction_residual", c.refiner.correction.residual, "refiner");
    read(s, "correction_skips", c.refiner.correction.skip_connections, "refiner");
  }
}

RunConfig parse_run_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    raise(ErrorKind::Config, std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c = yaml_to_json(root).get<RunConfig>();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Config, "cannot read config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_run_config(s.str());
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    raise(e.kind(), path.string() + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
}

std::string dump_run_config(const RunConfig& c) {
  YAML::Emitter out;
  emit(out, json(c));
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const RunConfig& c) {
  const std::string canonical = json(c).dump();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (int i = 0; i < 8; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace sinusseg::distill

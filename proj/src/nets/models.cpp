#include "sinusseg/nets/models.hpp"

#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "sinusseg/core/error.hpp"
#include "sinusseg/nets/ops.hpp"

namespace sinusseg::nets {

std::mt19937_64 make_rng(std::uint64_t seed, const std::string& tag) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : tag) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(h), std::uint32_t(h >> 32)};
  return std::mt19937_64(seq);
}

namespace {
int channels_at(int base, int level) { return base << level; }
}  // namespace

// --- backbone -------------------------------------------------------------------

void BackboneSpec::validate() const {
  if (name.empty()) raise(ErrorKind::Config, "backbone name is empty");
  if (base_channels < 1) raise(ErrorKind::Config, "backbone base_channels must be >= 1");
  if (depth < 1 || depth > 8) raise(ErrorKind::Config, "backbone depth must lie in [1, 8]");
  if (input_size < 1 || input_size % (1 << depth) != 0)
    raise(ErrorKind::Config, "backbone input_size " + std::to_string(input_size) + " is not divisible by 2^" +
                                 std::to_string(depth));
}

UNet::UNet(const BackboneSpec& spec, std::uint64_t seed) : SegmentationModel(spec) {
  spec.validate();
  auto rng = make_rng(seed, "unet");
  for (int l = 0; l <= spec.depth; ++l) {
    const int in = l == 0 ? 1 : channels_at(spec.base_channels, l - 1), out = channels_at(spec.base_channels, l);
    const std::string name = "down" + std::to_string(l);
    down_.push_back({ConvBlock(params_, name + ".a", in, out, 3, 1, 1, rng),
                     ConvBlock(params_, name + ".b", out, out, 3, 1, 1, rng)});
  }
  for (int l = spec.depth - 1; l >= 0; --l) {
    const int c = channels_at(spec.base_channels, l);
    const std::string name = "up" + std::to_string(l);
    up_.push_back({ConvBlock(params_, name + ".reduce", 2 * c, c, 1, 1, 0, rng),
                   ConvBlock(params_, name + ".a", 2 * c, c, 3, 1, 1, rng),
                   ConvBlock(params_, name + ".b", c, c, 3, 1, 1, rng)});
  }
  head_ = Conv2d(params_, "head", spec.base_channels, 1, 1, 1, 0, rng);
}

Tensor UNet::forward(const Tensor& images) const {
  const Shape s = images.shape();
  if (s.c != 1 || s.h % (1 << spec_.depth) || s.w % (1 << spec_.depth))
    raise(ErrorKind::Shape, "unet input " + s.str() + " must be single-channel with sides divisible by 2^" +
                                std::to_string(spec_.depth));
  std::vector<Tensor> skips;
  Tensor x = images;
  for (std::size_t l = 0; l < down_.size(); ++l) {
    if (l > 0) x = maxpool2(x);
    x = down_[l].b(down_[l].a(x));
    skips.push_back(x);
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    const std::size_t level = down_.size() - 2 - i;
    x = up_[i].reduce(upsample2(x));
    x = up_[i].b(up_[i].a(concat(skips[level], x)));
  }
  return head_(x);
}

namespace {
std::mutex g_registry_mutex;
std::map<std::string, BackboneFactory>& registry() {
  static std::map<std::string, BackboneFactory> r{
      {"unet", [](const BackboneSpec& s, std::uint64_t seed) { return std::make_unique<UNet>(s, seed); }}};
  return r;
}
}  // namespace

void register_backbone(const std::string& name, BackboneFactory factory) {
  std::lock_guard lock(g_registry_mutex);
  registry()[name] = std::move(factory);
}

std::vector<std::string> registered_backbones() {
  std::lock_guard lock(g_registry_mutex);
  std::vector<std::string> names;
  for (const auto& [name, f] : registry()) names.push_back(name);
  return names;
}

std::unique_ptr<SegmentationModel> build_backbone(const BackboneSpec& spec, std::uint64_t seed) {
  spec.validate();
  BackboneFactory factory;
  {
    std::lock_guard lock(g_registry_mutex);
    const auto it = registry().find(spec.name);
    if (it == registry().end()) raise(ErrorKind::Config, "unknown backbone '" + spec.name + "'");
    factory = it->second;
  }
  return factory(spec, seed);
}

// --- correction network ---------------------------------------------------------

void CorrectionNetSpec::validate() const {
  if (base_channels < 1) raise(ErrorKind::Config, "correction base_channels must be >= 1");
  if (input_size < 16 || input_size % 16 != 0)
    raise(ErrorKind::Config, "correction net input size " + std::to_string(input_size) + " is not divisible by 16");
  for (int s : cbam_stages)
    if (s < 1 || s >= kStages)
      raise(ErrorKind::Config, "CBAM stage " + std::to_string(s) + " is outside the intermediate stages 1..3");
}

CorrectionNet::CorrectionNet(const CorrectionNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec.validate();
  auto rng = make_rng(seed, "correction");
  const int b = spec.base_channels;
  stem_ = ConvBlock(params_, "stem", 1, b, 3, 1, 1, rng);
  for (int l = 1; l <= CorrectionNetSpec::kStages; ++l) {
    const std::string name = "down" + std::to_string(l);
    Down d{ConvBlock(params_, name + ".conv", channels_at(b, l - 1), channels_at(b, l), 3, 2, 1, rng),
           ResidualBlock(params_, name + ".res", channels_at(b, l), rng, spec.residual), nullptr};
    if (spec.cbam_stages.count(l)) d.cbam = std::make_unique<Cbam>(params_, name + ".cbam", channels_at(b, l), rng);
    down_.push_back(std::move(d));
  }
  for (int l = CorrectionNetSpec::kStages - 1; l >= 0; --l) {
    const std::string name = "up" + std::to_string(l);
    const int c = channels_at(b, l);
    Up u{ConvBlock(params_, name + ".reduce", 2 * c, c, 1, 1, 0, rng),
         ConvBlock(params_, name + ".fuse", 2 * c, c, 3, 1, 1, rng),
         ResidualBlock(params_, name + ".res", c, rng, spec.residual), nullptr};
    if (spec.cbam_stages.count(l)) u.cbam = std::make_unique<Cbam>(params_, name + ".cbam", c, rng);
    up_.push_back(std::move(u));
  }
  head_ = Conv2d(params_, "head", b, 1, 1, 1, 0, rng);
}

Tensor CorrectionNet::forward(const Tensor& x, std::vector<AttentionMaps>* maps) const {
  const Shape s = x.shape();
  if (s.c != 1 || s.h % 16 || s.w % 16)
    raise(ErrorKind::Shape, "correction net input " + s.str() + " must be single-channel with sides divisible by 16");
  auto gate = [&](const std::unique_ptr<Cbam>& cbam, const Tensor& t) {
    if (!cbam) return t;
    AttentionMaps m;
    Tensor out = (*cbam)(t, gate_mode_, maps ? &m : nullptr);
    if (maps && gate_mode_ != GateMode::Bypass) maps->push_back(std::move(m));
    return out;
  };
  std::vector<Tensor> skips{stem_(x)};
  Tensor h = skips.back();
  for (const auto& d : down_) {
    h = gate(d.cbam, d.res(d.conv(h)));
    skips.push_back(h);
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    const Up& u = up_[i];
    const Tensor& enc = skips[up_.size() - 1 - i];
    h = u.reduce(upsample2(h));
    const Tensor lateral = spec_.skip_connections ? enc : Tensor::zeros(enc.shape());
    h = gate(u.cbam, u.res(u.fuse(concat(lateral, h))));
  }
  return head_(h);
}

// --- CycleGAN components ----------------------------------------------------------

Generator::Generator(const GeneratorSpec& spec, std::uint64_t seed, const std::string& tag) {
  if (spec.filters < 1 || spec.residual_blocks < 0) raise(ErrorKind::Config, "invalid generator spec");
  auto rng = make_rng(seed, tag);
  const int f = spec.filters;
  stem_ = ConvBlock(params_, "stem", 1, f, 7, 1, 3, rng);
  down1_ = ConvBlock(params_, "down1", f, 2 * f, 3, 2, 1, rng);
  down2_ = ConvBlock(params_, "down2", 2 * f, 4 * f, 3, 2, 1, rng);
  for (int i = 0; i < spec.residual_blocks; ++i)
    body_.emplace_back(params_, "res" + std::to_string(i), 4 * f, rng, true, false);
  up1_ = ConvBlock(params_, "up1", 4 * f, 2 * f, 3, 1, 1, rng);
  up2_ = ConvBlock(params_, "up2", 2 * f, f, 3, 1, 1, rng);
  out_ = Conv2d(params_, "out", f, 1, 7, 1, 3, rng);
}

Tensor Generator::forward(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != 1 || s.h % 4 || s.w % 4) raise(ErrorKind::Shape, "generator input " + s.str());
  Tensor h = down2_(down1_(stem_(x)));
  for (const auto& r : body_) h = r(h);
  h = up2_(upsample2(up1_(upsample2(h))));
  return sigmoid(out_(h));
}

Discriminator::Discriminator(const DiscriminatorSpec& spec, std::uint64_t seed, const std::string& tag) {
  if (spec.filters < 1) raise(ErrorKind::Config, "invalid discriminator spec");
  auto rng = make_rng(seed, tag);
  const int f = spec.filters;
  first_ = Conv2d(params_, "c1", 1, f, 4, 2, 1, rng);
  second_ = ConvBlock(params_, "c2", f, 2 * f, 4, 2, 1, rng, Activation::LeakyRelu);
  third_ = ConvBlock(params_, "c3", 2 * f, 4 * f, 4, 2, 1, rng, Activation::LeakyRelu);
  score_ = Conv2d(params_, "score", 4 * f, 1, 3, 1, 1, rng);
}

Tensor Discriminator::forward(const Tensor& x) const {
  const Shape s = x.shape();
  if (s.c != 1 || s.h % 8 || s.w % 8) raise(ErrorKind::Shape, "discriminator input " + s.str());
  return score_(third_(second_(leaky_relu(first_(x), 0.2f))));
}

CycleGanPair build_cyclegan_pair(const GeneratorSpec& g, const DiscriminatorSpec& d, int resolution,
                                 std::uint64_t seed) {
  if (resolution < 16 || resolution % 8 != 0)
    raise(ErrorKind::Config, "refiner resolution " + std::to_string(resolution) + " is not a multiple of 8");
  return {std::make_unique<Generator>(g, seed, "g_ab"), std::make_unique<Generator>(g, seed, "g_ba"),
          std::make_unique<Discriminator>(d, seed, "d_a"), std::make_unique<Discriminator>(d, seed, "d_b")};
}

// --- JSON -------------------------------------------------------------------------

void to_json(nlohmann::json& j, const BackboneSpec& s) {
  j = {{"name", s.name}, {"input_size", s.input_size}, {"base_channels", s.base_channels}, {"depth", s.depth}};
}
void from_json(const nlohmann::json& j, BackboneSpec& s) {
  s.name = j.value("name", s.name);
  s.input_size = j.value("input_size", s.input_size);
  s.base_channels = j.value("base_channels", s.base_channels);
  s.depth = j.value("depth", s.depth);
}
void to_json(nlohmann::json& j, const CorrectionNetSpec& s) {
  j = {{"input_size", s.input_size},
       {"base_channels", s.base_channels},
       {"cbam_stages", s.cbam_stages},
       {"residual", s.residual},
       {"skip_connections", s.skip_connections}};
}
void from_json(const nlohmann::json& j, CorrectionNetSpec& s) {
  s.input_size = j.value("input_size", s.input_size);
  s.base_channels = j.value("base_channels", s.base_channels);
  if (j.contains("cbam_stages")) s.cbam_stages = j.at("cbam_stages").get<std::set<int>>();
  s.residual = j.value("residual", s.residual);
  s.skip_connections = j.value("skip_connections", s.skip_connections);
}
void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = {{"filters", s.filters}, {"residual_blocks", s.residual_blocks}};
}
void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  s.filters = j.value("filters", s.filters);
  s.residual_blocks = j.value("residual_blocks", s.residual_blocks);
}
void to_json(nlohmann::json& j, const DiscriminatorSpec& s) { j = {{"filters", s.filters}}; }
void from_json(const nlohmann::json& j, DiscriminatorSpec& s) { s.filters = j.value("filters", s.filters); }

}  // namespace sinusseg::nets

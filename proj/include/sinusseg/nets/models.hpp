#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sinusseg/nets/layers.hpp"

namespace sinusseg::nets {

/// Derives an independent stream for a named sub-network.
std::mt19937_64 make_rng(std::uint64_t seed, const std::string& tag);

// --- segmentation backbone ----------------------------------------------------

struct BackboneSpec {
  std::string name = "unet";
  int input_size = 128;
  int base_channels = 16;
  int depth = 4;

  /// Raises a config error for non-positive fields or an input size not
  /// divisible by 2^depth.
  void validate() const;
  friend bool operator==(const BackboneSpec&, const BackboneSpec&) = default;
};

/// Maps [N,1,H,W] grayscale in [0,1] to [N,1,H,W] foreground logits.
class SegmentationModel {
 public:
  explicit SegmentationModel(BackboneSpec spec) : spec_(std::move(spec)) {}
  virtual ~SegmentationModel() = default;

  virtual Tensor forward(const Tensor& images) const = 0;

  const BackboneSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 protected:
  BackboneSpec spec_;
  ParamStore params_;
};

using BackboneFactory = std::function<std::unique_ptr<SegmentationModel>(const BackboneSpec&, std::uint64_t seed)>;

/// Registers a backbone under `name`, replacing any previous entry. This is
/// the slot for externally trained models: a factory can build its own graph
/// and load foreign weights as long as it honours the forward contract.
void register_backbone(const std::string& name, BackboneFactory factory);
std::vector<std::string> registered_backbones();

/// Builds `spec.name` ("unet" is always available).
std::unique_ptr<SegmentationModel> build_backbone(const BackboneSpec& spec, std::uint64_t seed);

/// Compact U-Net: conv blocks at each of depth+1 levels, max-pool down,
/// nearest-upsample + conv up, concatenated skips, 1x1 head.
class UNet final : public SegmentationModel {
 public:
  UNet(const BackboneSpec& spec, std::uint64_t seed);
  Tensor forward(const Tensor& images) const override;

 private:
  struct Level {
    ConvBlock a, b;
  };
  struct Up {
    ConvBlock reduce;
    ConvBlock a, b;
  };
  std::vector<Level> down_;
  std::vector<Up> up_;
  Conv2d head_;
};

// --- correction network ---------------------------------------------------------

struct CorrectionNetSpec {
  static constexpr int kStages = 4;
  int input_size = 256;
  int base_channels = 32;
  std::set<int> cbam_stages{1, 2, 3};  // levels after the stem, excluding the bottleneck
  bool residual = true;
  bool skip_connections = true;

  void validate() const;
  friend bool operator==(const CorrectionNetSpec&, const CorrectionNetSpec&) = default;
};

/// Mask-to-mask encoder-decoder: stem, 4 stride-2 stages with residual
/// blocks, 4 upsampling stages fused with encoder features, 1x1 head. CBAM
/// follows the encoder and decoder stages listed in `cbam_stages`.
class CorrectionNet {
 public:
  CorrectionNet(const CorrectionNetSpec& spec, std::uint64_t seed);

  /// [N,1,H,W] probabilities -> [N,1,H,W] logits. When `maps` is given it
  /// receives the attention maps of every active CBAM block.
  Tensor forward(const Tensor& x, std::vector<AttentionMaps>* maps = nullptr) const;

  void set_gate_mode(GateMode mode) { gate_mode_ = mode; }
  const CorrectionNetSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  struct Down {
    ConvBlock conv;
    ResidualBlock res;
    std::unique_ptr<Cbam> cbam;
  };
  struct Up {
    ConvBlock reduce;
    ConvBlock fuse;
    ResidualBlock res;
    std::unique_ptr<Cbam> cbam;
  };

  CorrectionNetSpec spec_;
  ParamStore params_;
  ConvBlock stem_;
  std::vector<Down> down_;
  std::vector<Up> up_;  // deepest first
  Conv2d head_;
  GateMode gate_mode_ = GateMode::Active;
};

// --- CycleGAN generator / discriminator ----------------------------------------

struct GeneratorSpec {
  int filters = 16;
  int residual_blocks = 6;
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct DiscriminatorSpec {
  int filters = 16;
  friend bool operator==(const DiscriminatorSpec&, const DiscriminatorSpec&) = default;
};

/// 7x7 stem, two stride-2 convs, residual body, two upsample+conv stages,
/// 7x7 output conv, sigmoid.
class Generator {
 public:
  Generator(const GeneratorSpec& spec, std::uint64_t seed, const std::string& tag);
  Tensor forward(const Tensor& x) const;
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ParamStore params_;
  ConvBlock stem_, down1_, down2_, up1_, up2_;
  std::vector<ResidualBlock> body_;
  Conv2d out_;
};

/// PatchGAN: three 4x4 stride-2 convs, then a 3x3 conv to a score grid.
class Discriminator {
 public:
  Discriminator(const DiscriminatorSpec& spec, std::uint64_t seed, const std::string& tag);
  Tensor forward(const Tensor& x) const;
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ParamStore params_;
  Conv2d first_;
  ConvBlock second_, third_;
  Conv2d score_;
};

struct CycleGanPair {
  std::unique_ptr<Generator> g_ab;
  std::unique_ptr<Generator> g_ba;
  std::unique_ptr<Discriminator> d_a;
  std::unique_ptr<Discriminator> d_b;
};

/// Resolution must be divisible by 8.
CycleGanPair build_cyclegan_pair(const GeneratorSpec& g, const DiscriminatorSpec& d, int resolution,
                                 std::uint64_t seed);

void to_json(nlohmann::json& j, const BackboneSpec& s);
void from_json(const nlohmann::json& j, BackboneSpec& s);
void to_json(nlohmann::json& j, const CorrectionNetSpec& s);
void from_json(const nlohmann::json& j, CorrectionNetSpec& s);
void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);
void to_json(nlohmann::json& j, const DiscriminatorSpec& s);
void from_json(const nlohmann::json& j, DiscriminatorSpec& s);

}  // namespace sinusseg::nets

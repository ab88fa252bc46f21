#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sinusseg/nets/tensor.hpp"

namespace sinusseg::nets {

/// Named trainable tensors of one network, in construction order.
class ParamStore {
 public:
  /// Uniform(-bound, bound) initialization.
  Tensor add_uniform(const std::string& name, Shape shape, float bound, std::mt19937_64& rng);
  Tensor add_constant(const std::string& name, Shape shape, float value);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t parameter_count() const;
  void zero_grad();
  void set_requires_grad(bool on);
  /// Flat copy of every value, for bit-identity checks.
  std::vector<float> snapshot() const;
  /// Inverse of snapshot().
  void restore(const std::vector<float>& values);
  /// Copies values from a store with identical names and shapes.
  void copy_from(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

enum class Activation { None, Relu, LeakyRelu };

Tensor activate(const Tensor& x, Activation act);

struct Conv2d {
  Tensor weight;
  Tensor bias;
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, int pad,
         std::mt19937_64& rng, bool with_bias = true);
  Tensor operator()(const Tensor& x) const;
};

struct InstanceNorm2d {
  Tensor gamma;
  Tensor beta;

  InstanceNorm2d() = default;
  InstanceNorm2d(ParamStore& store, const std::string& name, int channels);
  Tensor operator()(const Tensor& x) const;
};

/// conv -> instance norm -> activation.
struct ConvBlock {
  Conv2d conv;
  InstanceNorm2d norm;
  Activation act = Activation::Relu;

  ConvBlock() = default;
  ConvBlock(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, int pad,
            std::mt19937_64& rng, Activation act = Activation::Relu);
  Tensor operator()(const Tensor& x) const;
};

/// Two 3x3 conv-norm layers with an identity shortcut. `residual = false`
/// drops the shortcut; `final_relu` applies ReLU after the sum.
struct ResidualBlock {
  ConvBlock first;
  Conv2d second;
  InstanceNorm2d norm;
  bool residual = true;
  bool final_relu = true;

  ResidualBlock() = default;
  ResidualBlock(ParamStore& store, const std::string& name, int channels, std::mt19937_64& rng, bool residual = true,
                bool final_relu = true);
  Tensor operator()(const Tensor& x) const;
};

struct AttentionMaps {
  Shape channel_shape;  // [N,C,1,1]
  Shape spatial_shape;  // [N,1,H,W]
  std::vector<float> channel_weights;
  std::vector<float> spatial_weights;
};

enum class GateMode {
  Active,     // learned channel and spatial gates
  UnitGates,  // both gates forced to 1
  Bypass,     // block skipped entirely
};

/// Channel attention (shared MLP over average- and max-pooled descriptors),
/// then spatial attention (7x7 conv over channel mean and max), both applied
/// multiplicatively.
struct Cbam {
  Conv2d fc1;
  Conv2d fc2;
  Conv2d spatial;
  int channels = 0;

  Cbam() = default;
  Cbam(ParamStore& store, const std::string& name, int channels, std::mt19937_64& rng, int reduction = 8);
  Tensor operator()(const Tensor& x, GateMode mode = GateMode::Active, AttentionMaps* maps = nullptr) const;
};

}  // namespace sinusseg::nets

#include "sinusseg/nets/layers.hpp"

#include <cmath>

#include "sinusseg/core/error.hpp"
#include "sinusseg/nets/ops.hpp"

namespace sinusseg::nets {

Tensor ParamStore::add_uniform(const std::string& name, Shape shape, float bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-bound, bound);
  std::vector<float> values(shape.numel());
  for (auto& v : values) v = u(rng);
  auto t = Tensor::from(shape, std::move(values), true);
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::add_constant(const std::string& name, Shape shape, float value) {
  auto t = Tensor::from(shape, std::vector<float>(shape.numel(), value), true);
  entries_.emplace_back(name, t);
  return t;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : entries_) out.push_back(t);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ParamStore::set_requires_grad(bool on) {
  for (auto& [name, t] : entries_) t.node()->requires_grad = on;
}

std::vector<float> ParamStore::snapshot() const {
  std::vector<float> out;
  for (const auto& [name, t] : entries_) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

void ParamStore::restore(const std::vector<float>& values) {
  std::size_t offset = 0;
  for (auto& [name, t] : entries_) {
    if (offset + t.numel() > values.size()) raise(ErrorKind::Shape, "snapshot too short at " + name);
    std::copy_n(values.begin() + std::ptrdiff_t(offset), t.numel(), t.data().begin());
    offset += t.numel();
  }
  if (offset != values.size()) raise(ErrorKind::Shape, "snapshot has extra values");
}

void ParamStore::copy_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) raise(ErrorKind::Shape, "parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, dst] = entries_[i];
    const auto& [oname, src] = other.entries_[i];
    if (name != oname || !(dst.shape() == src.shape()))
      raise(ErrorKind::Shape, "parameter mismatch: " + name + " vs " + oname);
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
  }
}

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::Relu:
      return relu(x);
    case Activation::LeakyRelu:
      return leaky_relu(x, 0.2f);
    case Activation::None:
      break;
  }
  return x;
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride_, int pad_,
               std::mt19937_64& rng, bool with_bias)
    : stride(stride_), pad(pad_) {
  const float bound = 1.0f / std::sqrt(float(in * kernel * kernel));
  weight = store.add_uniform(name + ".weight", {out, in, kernel, kernel}, bound, rng);
  if (with_bias) bias = store.add_uniform(name + ".bias", {1, out, 1, 1}, bound, rng);
}

Tensor Conv2d::operator()(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }

InstanceNorm2d::InstanceNorm2d(ParamStore& store, const std::string& name, int channels) {
  gamma = store.add_constant(name + ".gamma", {1, channels, 1, 1}, 1.0f);
  beta = store.add_constant(name + ".beta", {1, channels, 1, 1}, 0.0f);
}

Tensor InstanceNorm2d::operator()(const Tensor& x) const { return instance_norm(x, gamma, beta); }

ConvBlock::ConvBlock(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, int pad,
                     std::mt19937_64& rng, Activation act_)
    // Bias is redundant ahead of instance normalization.
    : conv(store, name + ".conv", in, out, kernel, stride, pad, rng, false), norm(store, name + ".norm", out), act(act_) {}

Tensor ConvBlock::operator()(const Tensor& x) const { return activate(norm(conv(x)), act); }

ResidualBlock::ResidualBlock(ParamStore& store, const std::string& name, int channels, std::mt19937_64& rng,
                             bool residual_, bool final_relu_)
    : first(store, name + ".a", channels, channels, 3, 1, 1, rng),
      second(store, name + ".b.conv", channels, channels, 3, 1, 1, rng, false),
      norm(store, name + ".b.norm", channels),
      residual(residual_),
      final_relu(final_relu_) {}

Tensor ResidualBlock::operator()(const Tensor& x) const {
  Tensor y = norm(second(first(x)));
  if (residual) y = add(x, y);
  return final_relu ? relu(y) : y;
}

Cbam::Cbam(ParamStore& store, const std::string& name, int channels_, std::mt19937_64& rng, int reduction)
    : channels(channels_) {
  if (channels < 2) raise(ErrorKind::Config, "CBAM needs at least 2 channels");
  const int hidden = std::max(1, channels / reduction);
  fc1 = Conv2d(store, name + ".mlp1", channels, hidden, 1, 1, 0, rng);
  fc2 = Conv2d(store, name + ".mlp2", hidden, channels, 1, 1, 0, rng);
  spatial = Conv2d(store, name + ".spatial", 2, 1, 7, 1, 3, rng);
}

Tensor Cbam::operator()(const Tensor& x, GateMode mode, AttentionMaps* maps) const {
  if (mode == GateMode::Bypass) return x;
  const Shape s = x.shape();
  Tensor channel_gate, spatial_gate;
  if (mode == GateMode::UnitGates) {
    channel_gate = Tensor::from({s.n, s.c, 1, 1}, std::vector<float>(std::size_t(s.n) * std::size_t(s.c), 1.0f));
  } else {
    auto mlp = [&](const Tensor& v) { return fc2(relu(fc1(v))); };
    channel_gate = sigmoid(add(mlp(global_avg_pool(x)), mlp(global_max_pool(x))));
  }
  Tensor y = scale_channels(x, channel_gate);
  if (mode == GateMode::UnitGates) {
    spatial_gate = Tensor::from({s.n, 1, s.h, s.w}, std::vector<float>(std::size_t(s.n) * s.plane(), 1.0f));
  } else {
    spatial_gate = sigmoid(spatial(concat(channel_mean(y), channel_max(y))));
  }
  if (maps) {
    maps->channel_shape = channel_gate.shape();
    maps->spatial_shape = spatial_gate.shape();
    maps->channel_weights.assign(channel_gate.data().begin(), channel_gate.data().end());
    maps->spatial_weights.assign(spatial_gate.data().begin(), spatial_gate.data().end());
  }
  return scale_spatial(y, spatial_gate);
}

}  // namespace sinusseg::nets

#pragma once

#include <vector>

#include "sinusseg/nets/tensor.hpp"

namespace sinusseg::nets {

struct AdamWConfig {
  float learning_rate = 1e-5f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.01f;
};

/// Adam with decoupled weight decay over a fixed parameter list.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig config);

  void zero_grad();
  /// Applies one update from the accumulated gradients. Parameters that
  /// received no gradient still decay.
  void step();
  long steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  AdamWConfig config_;
  long t_ = 0;
};

}  // namespace sinusseg::nets

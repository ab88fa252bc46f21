#include "sinusseg/nets/optim.hpp"

#include <cmath>

#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::nets {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0f);
    v_.emplace_back(p.numel(), 0.0f);
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamW::step() {
  ++t_;
  const simd::AdamWParams hp{config_.learning_rate,
                             config_.beta1,
                             config_.beta2,
                             config_.eps,
                             config_.weight_decay,
                             static_cast<float>(1.0 - std::pow(double(config_.beta1), double(t_))),
                             static_cast<float>(1.0 - std::pow(double(config_.beta2), double(t_)))};
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const auto g = p.grad();
    k.adamw_step(p.numel(), p.data().data(), g.data(), m_[i].data(), v_[i].data(), hp);
  }
}

}  // namespace sinusseg::nets

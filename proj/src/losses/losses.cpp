#include "sinusseg/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "sinusseg/core/error.hpp"

namespace sinusseg::losses {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    raise(ErrorKind::Shape, std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
}

std::size_t per_sample(std::size_t total, std::size_t batch, const char* what) {
  if (batch == 0 || total % batch != 0)
    raise(ErrorKind::Shape, std::string(what) + ": " + std::to_string(total) + " values do not split into " +
                                std::to_string(batch) + " samples");
  return total / batch;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

void LossParams::validate() const {
  auto fail = [](const std::string& msg) { raise(ErrorKind::Config, msg); };
  if (!(alpha >= 0 && alpha <= 1)) fail("alpha must lie in [0, 1]");
  if (!(beta >= 0)) fail("beta must be >= 0");
  if (!(lambda_cycle >= 0)) fail("lambda_cycle must be >= 0");
  if (!(temperature > 1)) fail("temperature must be > 1");
  if (std::isnan(tau)) fail("tau must be a number");
  if (!(threshold > 0 && threshold < 1)) fail("threshold must lie in (0, 1)");
  if (!(dice_eps > 0)) fail("dice_eps must be > 0");
}

double LossParams::tau_for(int width, int height) const {
  return tau > 0 ? tau : std::hypot(double(width), double(height)) / 20.0;
}

Graded bce_loss_grad(std::span<const double> logits, std::span<const double> target) {
  require_same_size(logits.size(), target.size(), "bce_loss");
  if (logits.empty()) raise(ErrorKind::Shape, "bce_loss: empty input");
  const double n = double(logits.size());
  Graded out{0.0, std::vector<double>(logits.size())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double a = logits[i], b = target[i];
    out.value += std::max(a, 0.0) - a * b + std::log1p(std::exp(-std::abs(a)));
    out.grad[i] = (sigmoid(a) - b) / n;
  }
  out.value /= n;
  return out;
}

double bce_loss(std::span<const double> logits, std::span<const double> target) {
  return bce_loss_grad(logits, target).value;
}

Graded dice_loss_grad(std::span<const double> probs, std::span<const double> target, std::size_t batch, double eps) {
  require_same_size(probs.size(), target.size(), "dice_loss");
  const std::size_t n = per_sample(probs.size(), batch, "dice_loss");
  Graded out{0.0, std::vector<double>(probs.size())};
  for (std::size_t s = 0; s < batch; ++s) {
    const auto p = probs.subspan(s * n, n);
    const auto y = target.subspan(s * n, n);
    double inter = 0, denom = eps;
    for (std::size_t i = 0; i < n; ++i) {
      inter += p[i] * y[i];
      denom += p[i] * p[i] + y[i] * y[i];
    }
    const double num = 2 * inter + eps;
    out.value += 1.0 - num / denom;
    for (std::size_t i = 0; i < n; ++i)
      out.grad[s * n + i] = -(2 * y[i] * denom - num * 2 * p[i]) / (denom * denom) / double(batch);
  }
  out.value /= double(batch);
  return out;
}

double dice_loss(std::span<const double> probs, std::span<const double> target, std::size_t batch, double eps) {
  return dice_loss_grad(probs, target, batch, eps).value;
}

Graded supervised_loss_grad(std::span<const double> logits, std::span<const double> target, std::size_t batch,
                            double eps) {
  std::vector<double> probs(logits.size());
  std::transform(logits.begin(), logits.end(), probs.begin(), sigmoid);
  const auto dice = dice_loss_grad(probs, target, batch, eps);
  auto out = bce_loss_grad(logits, target);
  out.value += dice.value;
  for (std::size_t i = 0; i < probs.size(); ++i) out.grad[i] += dice.grad[i] * probs[i] * (1 - probs[i]);
  return out;
}

double supervised_loss(std::span<const double> logits, std::span<const double> target, std::size_t batch,
                       double eps) {
  return supervised_loss_grad(logits, target, batch, eps).value;
}

std::pair<double, double> soften(double logit, double temperature) {
  const double fg = sigmoid(logit / temperature);
  return {sigmoid(-logit / temperature), fg};
}

Grid<std::pair<double, double>> soften(const LogitMap& logits, double temperature) {
  if (!(temperature > 1)) raise(ErrorKind::Argument, "temperature must be > 1");
  Grid<std::pair<double, double>> out(logits.width(), logits.height());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = soften(logits[i], temperature);
  return out;
}

std::vector<double> kd_weights(std::span<const double> hd95_values, double tau) {
  if (hd95_values.empty()) raise(ErrorKind::Argument, "kd_weights: empty HD95 list");
  if (!(tau > 0)) raise(ErrorKind::Argument, "kd_weights: tau must be > 0");
  // Dividing by the max of exp(-h/tau) is subtracting the min of h in the exponent.
  const double best = *std::min_element(hd95_values.begin(), hd95_values.end());
  std::vector<double> w(hd95_values.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(-(hd95_values[i] - best) / tau);
  return w;
}

double pixel_kl(double teacher_logit, double student_logit, double temperature) {
  const double a = teacher_logit / temperature, b = student_logit / temperature;
  // log q_fg = -softplus(-x), log q_bg = -softplus(x)
  const double qt_fg = sigmoid(a), qt_bg = sigmoid(-a);
  const double kl = qt_fg * (softplus(-b) - softplus(-a)) + qt_bg * (softplus(b) - softplus(a));
  return std::max(kl, 0.0);
}

Graded weighted_kd_loss_grad(std::span<const double> teacher_logits, std::span<const double> student_logits,
                             std::span<const double> weights, double temperature) {
  require_same_size(teacher_logits.size(), student_logits.size(), "weighted_kd_loss");
  const std::size_t batch = weights.size();
  const std::size_t n = per_sample(student_logits.size(), batch, "weighted_kd_loss");
  const double t = temperature;
  Graded out{0.0, std::vector<double>(student_logits.size())};
  for (std::size_t s = 0; s < batch; ++s) {
    double kl = 0;
    for (std::size_t i = s * n; i < (s + 1) * n; ++i) {
      kl += pixel_kl(teacher_logits[i], student_logits[i], t);
      const double qs = sigmoid(student_logits[i] / t), qt = sigmoid(teacher_logits[i] / t);
      out.grad[i] = t * weights[s] * (qs - qt) / double(batch * n);
    }
    out.value += weights[s] * kl / double(n);
  }
  out.value *= t * t / double(batch);
  return out;
}

double weighted_kd_loss(std::span<const double> teacher_logits, std::span<const double> student_logits,
                        std::span<const double> weights, double temperature) {
  return weighted_kd_loss_grad(teacher_logits, student_logits, weights, temperature).value;
}

Graded unsup_loss_grad(std::span<const double> logits, std::span<const double> pseudo) {
  require_same_size(logits.size(), pseudo.size(), "unsup_loss");
  Graded out{0.0, std::vector<double>(logits.size(), 0.0)};
  double fg = 0;
  for (double y : pseudo) fg += y;
  if (fg == 0) {
    spdlog::warn("unsup_loss: pseudo label has no foreground pixels; term is 0");
    return out;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (pseudo[i] == 0) continue;
    // BCE against target 1 is softplus(-z).
    out.value += pseudo[i] * softplus(-logits[i]);
    out.grad[i] = pseudo[i] * (sigmoid(logits[i]) - 1.0) / fg;
  }
  out.value /= fg;
  return out;
}

double unsup_loss(std::span<const double> logits, std::span<const double> pseudo) {
  return unsup_loss_grad(logits, pseudo).value;
}

double total_loss(double sup, double wkd, double unsup, const LossParams& p) {
  return p.alpha * sup + p.beta * wkd + (1 - p.alpha) * unsup;
}

LsganDiscriminator lsgan_discriminator_loss_grad(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) raise(ErrorKind::Shape, "lsgan: empty score map");
  LsganDiscriminator out{0.0, std::vector<double>(d_real.size()), std::vector<double>(d_fake.size())};
  double real = 0, fake = 0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    real += (d_real[i] - 1) * (d_real[i] - 1);
    out.grad_real[i] = 2 * (d_real[i] - 1) / double(d_real.size());
  }
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    fake += d_fake[i] * d_fake[i];
    out.grad_fake[i] = 2 * d_fake[i] / double(d_fake.size());
  }
  out.value = real / double(d_real.size()) + fake / double(d_fake.size());
  return out;
}

double lsgan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  return lsgan_discriminator_loss_grad(d_real, d_fake).value;
}

Graded lsgan_generator_loss_grad(std::span<const double> d_fake) {
  if (d_fake.empty()) raise(ErrorKind::Shape, "lsgan: empty score map");
  Graded out{0.0, std::vector<double>(d_fake.size())};
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    out.value += (d_fake[i] - 1) * (d_fake[i] - 1);
    out.grad[i] = 2 * (d_fake[i] - 1) / double(d_fake.size());
  }
  out.value /= double(d_fake.size());
  return out;
}

double lsgan_generator_loss(std::span<const double> d_fake) { return lsgan_generator_loss_grad(d_fake).value; }

namespace {
double mean_l1(std::span<const double> recon, std::span<const double> orig, std::vector<double>& grad) {
  require_same_size(recon.size(), orig.size(), "cycle_loss");
  if (recon.empty()) raise(ErrorKind::Shape, "cycle_loss: empty input");
  const double n = double(recon.size());
  grad.resize(recon.size());
  double sum = 0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double d = recon[i] - orig[i];
    sum += std::abs(d);
    grad[i] = (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n;
  }
  return sum / n;
}
}  // namespace

CycleGrad cycle_loss_grad(std::span<const double> recon_a, std::span<const double> orig_a,
                          std::span<const double> recon_b, std::span<const double> orig_b) {
  CycleGrad out;
  out.value = mean_l1(recon_a, orig_a, out.grad_a) + mean_l1(recon_b, orig_b, out.grad_b);
  return out;
}

double cycle_loss(std::span<const double> recon_a, std::span<const double> orig_a, std::span<const double> recon_b,
                  std::span<const double> orig_b) {
  return cycle_loss_grad(recon_a, orig_a, recon_b, orig_b).value;
}

double correction_loss(std::span<const double> corrected_ab, std::span<const double> target_b,
                       std::span<const double> corrected_ba, std::span<const double> target_a) {
  return bce_loss(corrected_ab, target_b) + bce_loss(corrected_ba, target_a);
}

double refiner_total_loss(double adv_ab, double adv_ba, double cyc, double corr, double lambda_cycle) {
  return adv_ab + adv_ba + lambda_cycle * cyc + corr;
}

std::vector<double> as_values(const BinaryMask& mask) { return {mask.values().begin(), mask.values().end()}; }

}  // namespace sinusseg::losses

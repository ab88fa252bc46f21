#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sinusseg/core/grid.hpp"

namespace sinusseg::losses {

struct LossParams {
  double alpha = 0.5;          // supervised vs unsupervised balance
  double beta = 1e-6;          // distillation weight
  double lambda_cycle = 10.0;  // cycle-consistency weight
  double temperature = 2.0;    // KD softening
  double tau = 0.0;            // HD95 scale in pixels; <= 0 means image_diagonal / 20
  double threshold = 0.5;      // probability binarization threshold
  double dice_eps = 1e-6;

  /// Raises a config error naming the first out-of-range field.
  void validate() const;
  /// tau, or the diagonal-based default when tau is unset.
  double tau_for(int width, int height) const;
};

/// A loss value and its gradient with respect to the (first) input.
struct Graded {
  double value = 0;
  std::vector<double> grad;
};

/// Inputs below are flat, sample-major batches of equally sized maps.

/// Mean binary cross-entropy of logits against targets in [0, 1].
Graded bce_loss_grad(std::span<const double> logits, std::span<const double> target);
double bce_loss(std::span<const double> logits, std::span<const double> target);

/// 1 - (2 sum(p y) + eps) / (sum(p^2) + sum(y^2) + eps) per sample, averaged
/// over `batch` samples. Gradient is with respect to the probabilities.
Graded dice_loss_grad(std::span<const double> probs, std::span<const double> target, std::size_t batch,
                      double eps = 1e-6);
double dice_loss(std::span<const double> probs, std::span<const double> target, std::size_t batch,
                 double eps = 1e-6);

/// dice_loss(sigmoid(logits)) + bce_loss(logits); gradient w.r.t. logits.
Graded supervised_loss_grad(std::span<const double> logits, std::span<const double> target, std::size_t batch,
                            double eps = 1e-6);
double supervised_loss(std::span<const double> logits, std::span<const double> target, std::size_t batch,
                       double eps = 1e-6);

/// (q_background, q_foreground) = softmax(0, z / T).
std::pair<double, double> soften(double logit, double temperature);
Grid<std::pair<double, double>> soften(const LogitMap& logits, double temperature);

/// exp(-hd_i / tau) normalized so the largest weight is 1.
std::vector<double> kd_weights(std::span<const double> hd95_values, double tau);

/// Two-class KL(q_t || q_s) of softened teacher and student logits at one pixel.
double pixel_kl(double teacher_logit, double student_logit, double temperature);

/// (T^2 / B) * sum_i w_i * mean_pixels KL(q_t,i || q_s,i), B = weights.size().
/// Gradient is with respect to the student logits.
Graded weighted_kd_loss_grad(std::span<const double> teacher_logits, std::span<const double> student_logits,
                             std::span<const double> weights, double temperature);
double weighted_kd_loss(std::span<const double> teacher_logits, std::span<const double> student_logits,
                        std::span<const double> weights, double temperature);

/// Per-pixel BCE against the pseudo label, averaged over the pseudo-foreground
/// pixels of the whole batch. An all-background batch gives 0 and a warning.
Graded unsup_loss_grad(std::span<const double> logits, std::span<const double> pseudo);
double unsup_loss(std::span<const double> logits, std::span<const double> pseudo);

double total_loss(double sup, double wkd, double unsup, const LossParams& p);

struct LsganDiscriminator {
  double value = 0;
  std::vector<double> grad_real;
  std::vector<double> grad_fake;
};

/// mean((d_real - 1)^2) + mean(d_fake^2).
LsganDiscriminator lsgan_discriminator_loss_grad(std::span<const double> d_real, std::span<const double> d_fake);
double lsgan_discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// mean((d_fake - 1)^2).
Graded lsgan_generator_loss_grad(std::span<const double> d_fake);
double lsgan_generator_loss(std::span<const double> d_fake);

struct CycleGrad {
  double value = 0;
  std::vector<double> grad_a;  // w.r.t. recon_a
  std::vector<double> grad_b;  // w.r.t. recon_b
};

/// mean|recon_a - orig_a| + mean|recon_b - orig_b|.
CycleGrad cycle_loss_grad(std::span<const double> recon_a, std::span<const double> orig_a,
                          std::span<const double> recon_b, std::span<const double> orig_b);
double cycle_loss(std::span<const double> recon_a, std::span<const double> orig_a, std::span<const double> recon_b,
                  std::span<const double> orig_b);

/// bce(corrected_ab, target_b) + bce(corrected_ba, target_a).
double correction_loss(std::span<const double> corrected_ab, std::span<const double> target_b,
                       std::span<const double> corrected_ba, std::span<const double> target_a);

double refiner_total_loss(double adv_ab, double adv_ba, double cyc, double corr, double lambda_cycle);

/// Convenience views of single maps.
std::vector<double> as_values(const BinaryMask& mask);
inline std::span<const double> as_span(const Grid<double>& g) { return g.values(); }

}  // namespace sinusseg::losses

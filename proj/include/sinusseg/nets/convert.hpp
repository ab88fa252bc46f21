#pragma once

#include <vector>

#include "sinusseg/core/grid.hpp"
#include "sinusseg/nets/tensor.hpp"

namespace sinusseg::nets {

/// Stacks equally sized masks into [N,1,H,W] with values {0,1}.
Tensor stack_masks(const std::vector<const BinaryMask*>& masks);
/// Stacks 8-bit images into [N,1,H,W] scaled to [0,1].
Tensor stack_images(const std::vector<const GrayImage*>& images);

/// Sample `i` of a [N,1,H,W] tensor as a grid.
Grid<double> unstack(const Tensor& t, int i);

/// Per-sample masks of sigmoid(logits) >= threshold.
std::vector<BinaryMask> logits_to_masks(const Tensor& logits, double threshold);
/// Per-sample masks of probs >= threshold.
std::vector<BinaryMask> probs_to_masks(const Tensor& probs, double threshold);

std::vector<double> to_double(std::span<const float> v);
std::vector<float> to_float(const std::vector<double>& v, double scale = 1.0);

}  // namespace sinusseg::nets

#pragma once

#include "sinusseg/nets/tensor.hpp"

namespace sinusseg::nets {

/// 2D cross-correlation. x [N,Ci,H,W], w [Co,Ci,k,k], optional bias [1,Co,1,1].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);

/// Per-sample, per-channel normalization over H*W with affine [1,C,1,1].
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float slope);
Tensor sigmoid(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// 2x2 max pooling with stride 2 (H, W even).
Tensor maxpool2(const Tensor& x);
/// Nearest-neighbour 2x upsampling.
Tensor upsample2(const Tensor& x);

/// Concatenation along channels.
Tensor concat(const Tensor& a, const Tensor& b);

/// x [N,C,H,W] * s [N,C,1,1].
Tensor scale_channels(const Tensor& x, const Tensor& s);
/// x [N,C,H,W] * m [N,1,H,W].
Tensor scale_spatial(const Tensor& x, const Tensor& m);

/// Spatial mean / max per channel -> [N,C,1,1].
Tensor global_avg_pool(const Tensor& x);
Tensor global_max_pool(const Tensor& x);

/// Mean / max over channels -> [N,1,H,W].
Tensor channel_mean(const Tensor& x);
Tensor channel_max(const Tensor& x);

}  // namespace sinusseg::nets

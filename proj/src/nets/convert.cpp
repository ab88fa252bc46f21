#include "sinusseg/nets/convert.hpp"

#include "sinusseg/core/error.hpp"

namespace sinusseg::nets {

namespace {
template <class G, class F>
Tensor stack(const std::vector<const G*>& grids, F convert) {
  if (grids.empty()) raise(ErrorKind::Shape, "cannot stack an empty batch");
  const int w = grids[0]->width(), h = grids[0]->height();
  std::vector<float> v;
  v.reserve(grids.size() * std::size_t(w) * std::size_t(h));
  for (const G* g : grids) {
    if (g->width() != w || g->height() != h)
      raise(ErrorKind::Shape, "batch mixes " + std::to_string(w) + "x" + std::to_string(h) + " and " +
                                  std::to_string(g->width()) + "x" + std::to_string(g->height()));
    for (auto x : g->values()) v.push_back(convert(x));
  }
  return Tensor::from({int(grids.size()), 1, h, w}, std::move(v));
}
}  // namespace

Tensor stack_masks(const std::vector<const BinaryMask*>& masks) {
  return stack(masks, [](std::uint8_t x) { return x ? 1.0f : 0.0f; });
}

Tensor stack_images(const std::vector<const GrayImage*>& images) {
  return stack(images, [](std::uint8_t x) { return float(x) / 255.0f; });
}

Grid<double> unstack(const Tensor& t, int i) {
  const Shape s = t.shape();
  if (s.c != 1) raise(ErrorKind::Shape, "unstack expects one channel, got " + s.str());
  Grid<double> g(s.w, s.h);
  const auto src = t.sample(i);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = src[k];
  return g;
}

std::vector<BinaryMask> logits_to_masks(const Tensor& logits, double threshold) {
  std::vector<BinaryMask> out;
  for (int i = 0; i < logits.shape().n; ++i) out.push_back(binarize_logits(unstack(logits, i), threshold));
  return out;
}

std::vector<BinaryMask> probs_to_masks(const Tensor& probs, double threshold) {
  std::vector<BinaryMask> out;
  for (int i = 0; i < probs.shape().n; ++i) out.push_back(binarize(unstack(probs, i), threshold));
  return out;
}

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

std::vector<float> to_float(const std::vector<double>& v, double scale) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = float(v[i] * scale);
  return out;
}

}  // namespace sinusseg::nets

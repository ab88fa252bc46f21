#include "sinusseg/nets/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sinusseg/core/error.hpp"
#include "sinusseg/simd/kernels.hpp"

namespace sinusseg::nets {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) raise(ErrorKind::Shape, what);
}

struct ConvGeometry {
  int ci, h, w, k, stride, pad, ho, wo;
  int rows() const { return ci * k * k; }
  int cols() const { return ho * wo; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

void im2col(const float* x, const ConvGeometry& g, float* col) {
  for (int c = 0; c < g.ci; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        float* dst = col + std::size_t((c * g.k + ky) * g.k + kx) * std::size_t(g.cols());
        const float* plane = x + std::size_t(c) * std::size_t(g.h) * std::size_t(g.w);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          float* row = dst + std::size_t(oy) * std::size_t(g.wo);
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.wo, 0.0f);
            continue;
          }
          const float* src = plane + std::size_t(iy) * std::size_t(g.w);
          if (g.stride == 1) {
            const int lo = std::max(0, g.pad - kx), hi = std::min(g.wo, g.w + g.pad - kx);
            std::fill(row, row + std::max(lo, 0), 0.0f);
            if (hi > lo) std::copy(src + lo - g.pad + kx, src + hi - g.pad + kx, row + lo);
            std::fill(row + std::max(hi, lo), row + g.wo, 0.0f);
          } else {
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.stride - g.pad + kx;
              row[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0f;
            }
          }
        }
      }
}

void col2im(const float* col, const ConvGeometry& g, float* x) {
  for (int c = 0; c < g.ci; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const float* src = col + std::size_t((c * g.k + ky) * g.k + kx) * std::size_t(g.cols());
        float* plane = x + std::size_t(c) * std::size_t(g.h) * std::size_t(g.w);
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          float* dst = plane + std::size_t(iy) * std::size_t(g.w);
          const float* row = src + std::size_t(oy) * std::size_t(g.wo);
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += row[ox];
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  require(ws.h == ws.w && ws.c == xs.c,
          "conv2d: weight " + ws.str() + " does not match input " + xs.str());
  require(stride >= 1 && pad >= 0, "conv2d: bad stride/padding");
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, stride, pad, 0, 0};
  g.ho = (xs.h + 2 * pad - g.k) / stride + 1;
  g.wo = (xs.w + 2 * pad - g.k) / stride + 1;
  require(g.ho > 0 && g.wo > 0, "conv2d: input " + xs.str() + " smaller than kernel");
  const int co = ws.n, kk = g.rows(), p = g.cols();
  if (bias.defined()) require(bias.numel() == std::size_t(co), "conv2d: bias size");

  const auto& K = simd::kernels();
  const Shape os{xs.n, co, g.ho, g.wo};
  std::vector<float> out(os.numel());
  std::vector<float> col(g.pointwise() ? 0 : std::size_t(kk) * std::size_t(p));
  const std::size_t in_per = std::size_t(xs.c) * xs.plane(), out_per = std::size_t(co) * std::size_t(p);
  for (int n = 0; n < xs.n; ++n) {
    const float* xn = x.data().data() + std::size_t(n) * in_per;
    const float* b = xn;
    if (!g.pointwise()) {
      im2col(xn, g, col.data());
      b = col.data();
    }
    float* on = out.data() + std::size_t(n) * out_per;
    K.gemm_nn(co, p, kk, w.data().data(), kk, b, p, on, p, false);
    if (bias.defined())
      for (int o = 0; o < co; ++o) {
        const float bv = bias.data()[std::size_t(o)];
        float* row = on + std::size_t(o) * std::size_t(p);
        for (int i = 0; i < p; ++i) row[i] += bv;
      }
  }

  return make_result(os, std::move(out), {x, w, bias}, [g, co, kk, p, in_per, out_per](detail::Node& self) {
    detail::Node& xn = *self.parents[0];
    detail::Node& wn = *self.parents[1];
    detail::Node* bn = self.parents[2].get();
    const auto& K = simd::kernels();
    const int batch = self.shape.n;
    std::vector<float> col(g.pointwise() ? 0 : std::size_t(kk) * std::size_t(p));
    std::vector<float> wt;
    std::vector<float> dcol;
    if (xn.requires_grad) {
      // W^T [kk, co]
      wt.resize(std::size_t(kk) * std::size_t(co));
      for (int o = 0; o < co; ++o)
        for (int r = 0; r < kk; ++r) wt[std::size_t(r) * co + o] = wn.value[std::size_t(o) * kk + r];
      if (!g.pointwise()) dcol.resize(std::size_t(kk) * std::size_t(p));
    }
    for (int n = 0; n < batch; ++n) {
      const float* dout = self.grad.data() + std::size_t(n) * out_per;
      const float* xv = xn.value.data() + std::size_t(n) * in_per;
      if (wn.requires_grad) {
        const float* b = xv;
        if (!g.pointwise()) {
          im2col(xv, g, col.data());
          b = col.data();
        }
        K.gemm_nt(co, kk, p, dout, p, b, p, wn.ensure_grad().data(), kk, true);
      }
      if (bn && bn->requires_grad) {
        auto& db = bn->ensure_grad();
        for (int o = 0; o < co; ++o) {
          const float* row = dout + std::size_t(o) * std::size_t(p);
          float s = 0;
          for (int i = 0; i < p; ++i) s += row[i];
          db[std::size_t(o)] += s;
        }
      }
      if (xn.requires_grad) {
        float* dx = xn.ensure_grad().data() + std::size_t(n) * in_per;
        if (g.pointwise()) {
          K.gemm_nn(kk, p, co, wt.data(), co, dout, p, dx, p, true);
        } else {
          K.gemm_nn(kk, p, co, wt.data(), co, dout, p, dcol.data(), p, false);
          col2im(dcol.data(), g, dx);
        }
      }
    }
  });
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const Shape s = x.shape();
  require(gamma.numel() == std::size_t(s.c) && beta.numel() == std::size_t(s.c), "instance_norm: affine size");
  const std::size_t m = s.plane();
  require(m > 1, "instance_norm: needs more than one pixel per plane");
  std::vector<float> out(s.numel()), xhat(s.numel()), inv_std(std::size_t(s.n) * std::size_t(s.c));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const std::size_t plane = std::size_t(n) * std::size_t(s.c) + std::size_t(c);
      const float* src = x.data().data() + plane * m;
      double mean = 0;
      for (std::size_t i = 0; i < m; ++i) mean += src[i];
      mean /= double(m);
      double var = 0;
      for (std::size_t i = 0; i < m; ++i) var += (src[i] - mean) * (src[i] - mean);
      var /= double(m);
      const float is = float(1.0 / std::sqrt(var + eps));
      inv_std[plane] = is;
      const float gm = gamma.data()[std::size_t(c)], bt = beta.data()[std::size_t(c)], mu = float(mean);
      float* xh = xhat.data() + plane * m;
      float* dst = out.data() + plane * m;
      for (std::size_t i = 0; i < m; ++i) {
        xh[i] = (src[i] - mu) * is;
        dst[i] = gm * xh[i] + bt;
      }
    }
  return make_result(s, std::move(out), {x, gamma, beta},
                     [s, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
                       detail::Node& xn = *self.parents[0];
                       detail::Node& gn = *self.parents[1];
                       detail::Node& bn = *self.parents[2];
                       for (int n = 0; n < s.n; ++n)
                         for (int c = 0; c < s.c; ++c) {
                           const std::size_t plane = std::size_t(n) * std::size_t(s.c) + std::size_t(c);
                           const float* dy = self.grad.data() + plane * m;
                           const float* xh = xhat.data() + plane * m;
                           double sum_dy = 0, sum_dy_xh = 0;
                           for (std::size_t i = 0; i < m; ++i) {
                             sum_dy += dy[i];
                             sum_dy_xh += double(dy[i]) * xh[i];
                           }
                           if (gn.requires_grad) gn.ensure_grad()[std::size_t(c)] += float(sum_dy_xh);
                           if (bn.requires_grad) bn.ensure_grad()[std::size_t(c)] += float(sum_dy);
                           if (!xn.requires_grad) continue;
                           const float gm = gn.value[std::size_t(c)];
                           const float k = gm * inv_std[plane] / float(m);
                           const float a = float(sum_dy), b = float(sum_dy_xh);
                           float* dx = xn.ensure_grad().data() + plane * m;
                           for (std::size_t i = 0; i < m; ++i) dx[i] += k * (float(m) * dy[i] - a - xh[i] * b);
                         }
                     });
}

namespace {
template <class F, class D>
Tensor pointwise(const Tensor& x, F f, D df_from_out) {
  std::vector<float> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [df_from_out](detail::Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    const auto& xin = self.parents[0]->value;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * df_from_out(xin[i], self.value[i]);
  });
}
}  // namespace

Tensor relu(const Tensor& x) {
  return pointwise(x, [](float v) { return v > 0 ? v : 0.0f; }, [](float in, float) { return in > 0 ? 1.0f : 0.0f; });
}

Tensor leaky_relu(const Tensor& x, float slope) {
  return pointwise(
      x, [slope](float v) { return v > 0 ? v : slope * v; }, [slope](float in, float) { return in > 0 ? 1.0f : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return pointwise(
      x,
      [](float v) {
        if (v >= 0) return 1.0f / (1.0f + std::exp(-v));
        const float e = std::exp(v);
        return e / (1.0f + e);
      },
      [](float, float out) { return out * (1.0f - out); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: " + a.shape().str() + " vs " + b.shape().str());
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int k = 0; k < 2; ++k) {
      detail::Node& p = *self.parents[std::size_t(k)];
      if (!p.requires_grad) continue;
      auto& d = p.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: " + a.shape().str() + " vs " + b.shape().str());
  std::vector<float> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    detail::Node& pa = *self.parents[0];
    detail::Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& d = pa.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& d = pb.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor maxpool2(const Tensor& x) {
  const Shape s = x.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0, "maxpool2: odd extent " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  std::vector<float> out(os.numel());
  std::vector<std::uint32_t> arg(os.numel());
  const float* in = x.data().data();
  std::size_t o = 0;
  for (int pl = 0; pl < s.n * s.c; ++pl) {
    const std::size_t base = std::size_t(pl) * s.plane();
    for (int r = 0; r < os.h; ++r)
      for (int c = 0; c < os.w; ++c, ++o) {
        std::size_t best = base + std::size_t(2 * r) * std::size_t(s.w) + std::size_t(2 * c);
        for (std::size_t cand : {best + 1, best + std::size_t(s.w), best + std::size_t(s.w) + 1})
          if (in[cand] > in[best]) best = cand;
        out[o] = in[best];
        arg[o] = std::uint32_t(best);
      }
  }
  return make_result(os, std::move(out), {x}, [arg = std::move(arg)](detail::Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += self.grad[i];
  });
}

Tensor upsample2(const Tensor& x) {
  const Shape s = x.shape();
  const Shape os{s.n, s.c, s.h * 2, s.w * 2};
  std::vector<float> out(os.numel());
  const float* in = x.data().data();
  for (int pl = 0; pl < s.n * s.c; ++pl) {
    const float* src = in + std::size_t(pl) * s.plane();
    float* dst = out.data() + std::size_t(pl) * os.plane();
    for (int r = 0; r < os.h; ++r) {
      const float* srow = src + std::size_t(r / 2) * std::size_t(s.w);
      float* drow = dst + std::size_t(r) * std::size_t(os.w);
      for (int c = 0; c < os.w; ++c) drow[c] = srow[c / 2];
    }
  }
  return make_result(os, std::move(out), {x}, [s, os](detail::Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    for (int pl = 0; pl < s.n * s.c; ++pl) {
      const float* g = self.grad.data() + std::size_t(pl) * os.plane();
      float* d = dx.data() + std::size_t(pl) * s.plane();
      for (int r = 0; r < os.h; ++r)
        for (int c = 0; c < os.w; ++c) d[std::size_t(r / 2) * std::size_t(s.w) + std::size_t(c / 2)] += g[std::size_t(r) * std::size_t(os.w) + std::size_t(c)];
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w, "concat: " + sa.str() + " vs " + sb.str());
  const Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
  const std::size_t pa = std::size_t(sa.c) * sa.plane(), pb = std::size_t(sb.c) * sb.plane();
  std::vector<float> out(os.numel());
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.data().data() + std::size_t(n) * pa, pa, out.data() + std::size_t(n) * (pa + pb));
    std::copy_n(b.data().data() + std::size_t(n) * pb, pb, out.data() + std::size_t(n) * (pa + pb) + pa);
  }
  return make_result(os, std::move(out), {a, b}, [pa, pb](detail::Node& self) {
    const int batch = self.shape.n;
    for (int k = 0; k < 2; ++k) {
      detail::Node& p = *self.parents[std::size_t(k)];
      if (!p.requires_grad) continue;
      auto& d = p.ensure_grad();
      const std::size_t len = k == 0 ? pa : pb, off = k == 0 ? 0 : pa;
      for (int n = 0; n < batch; ++n) {
        const float* g = self.grad.data() + std::size_t(n) * (pa + pb) + off;
        float* dst = d.data() + std::size_t(n) * len;
        for (std::size_t i = 0; i < len; ++i) dst[i] += g[i];
      }
    }
  });
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  const Shape xs = x.shape();
  require(s.shape() == Shape{xs.n, xs.c, 1, 1}, "scale_channels: " + s.shape().str() + " for " + xs.str());
  const std::size_t m = xs.plane();
  std::vector<float> out(xs.numel());
  for (std::size_t pl = 0; pl < std::size_t(xs.n) * std::size_t(xs.c); ++pl) {
    const float f = s.data()[pl];
    for (std::size_t i = 0; i < m; ++i) out[pl * m + i] = x.data()[pl * m + i] * f;
  }
  return make_result(xs, std::move(out), {x, s}, [m](detail::Node& self) {
    detail::Node& xn = *self.parents[0];
    detail::Node& sn = *self.parents[1];
    const std::size_t planes = sn.value.size();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const float* g = self.grad.data() + pl * m;
      if (xn.requires_grad) {
        float* d = xn.ensure_grad().data() + pl * m;
        const float f = sn.value[pl];
        for (std::size_t i = 0; i < m; ++i) d[i] += g[i] * f;
      }
      if (sn.requires_grad) {
        const float* xv = xn.value.data() + pl * m;
        float acc = 0;
        for (std::size_t i = 0; i < m; ++i) acc += g[i] * xv[i];
        sn.ensure_grad()[pl] += acc;
      }
    }
  });
}

Tensor scale_spatial(const Tensor& x, const Tensor& mask) {
  const Shape xs = x.shape();
  require(mask.shape() == Shape{xs.n, 1, xs.h, xs.w}, "scale_spatial: " + mask.shape().str() + " for " + xs.str());
  const std::size_t m = xs.plane();
  std::vector<float> out(xs.numel());
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const std::size_t pl = std::size_t(n) * std::size_t(xs.c) + std::size_t(c);
      const float* mv = mask.data().data() + std::size_t(n) * m;
      for (std::size_t i = 0; i < m; ++i) out[pl * m + i] = x.data()[pl * m + i] * mv[i];
    }
  return make_result(xs, std::move(out), {x, mask}, [xs, m](detail::Node& self) {
    detail::Node& xn = *self.parents[0];
    detail::Node& mn = *self.parents[1];
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const std::size_t pl = std::size_t(n) * std::size_t(xs.c) + std::size_t(c);
        const float* g = self.grad.data() + pl * m;
        const float* mv = mn.value.data() + std::size_t(n) * m;
        if (xn.requires_grad) {
          float* d = xn.ensure_grad().data() + pl * m;
          for (std::size_t i = 0; i < m; ++i) d[i] += g[i] * mv[i];
        }
        if (mn.requires_grad) {
          float* d = mn.ensure_grad().data() + std::size_t(n) * m;
          const float* xv = xn.value.data() + pl * m;
          for (std::size_t i = 0; i < m; ++i) d[i] += g[i] * xv[i];
        }
      }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape();
  const std::size_t m = s.plane(), planes = std::size_t(s.n) * std::size_t(s.c);
  std::vector<float> out(planes);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    double acc = 0;
    for (std::size_t i = 0; i < m; ++i) acc += x.data()[pl * m + i];
    out[pl] = float(acc / double(m));
  }
  return make_result({s.n, s.c, 1, 1}, std::move(out), {x}, [m, planes](detail::Node& self) {
    auto& d = self.parents[0]->ensure_grad();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const float g = self.grad[pl] / float(m);
      for (std::size_t i = 0; i < m; ++i) d[pl * m + i] += g;
    }
  });
}

Tensor global_max_pool(const Tensor& x) {
  const Shape s = x.shape();
  const std::size_t m = s.plane(), planes = std::size_t(s.n) * std::size_t(s.c);
  std::vector<float> out(planes);
  std::vector<std::size_t> arg(planes);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const float* src = x.data().data() + pl * m;
    const std::size_t best = std::size_t(std::max_element(src, src + m) - src);
    out[pl] = src[best];
    arg[pl] = pl * m + best;
  }
  return make_result({s.n, s.c, 1, 1}, std::move(out), {x}, [arg = std::move(arg)](detail::Node& self) {
    auto& d = self.parents[0]->ensure_grad();
    for (std::size_t pl = 0; pl < arg.size(); ++pl) d[arg[pl]] += self.grad[pl];
  });
}

Tensor channel_mean(const Tensor& x) {
  const Shape s = x.shape();
  const std::size_t m = s.plane();
  std::vector<float> out(std::size_t(s.n) * m, 0.0f);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.data().data() + (std::size_t(n) * std::size_t(s.c) + std::size_t(c)) * m;
      float* dst = out.data() + std::size_t(n) * m;
      for (std::size_t i = 0; i < m; ++i) dst[i] += src[i];
    }
  for (auto& v : out) v /= float(s.c);
  return make_result({s.n, 1, s.h, s.w}, std::move(out), {x}, [s, m](detail::Node& self) {
    auto& d = self.parents[0]->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        float* dst = d.data() + (std::size_t(n) * std::size_t(s.c) + std::size_t(c)) * m;
        const float* g = self.grad.data() + std::size_t(n) * m;
        for (std::size_t i = 0; i < m; ++i) dst[i] += g[i] / float(s.c);
      }
  });
}

Tensor channel_max(const Tensor& x) {
  const Shape s = x.shape();
  const std::size_t m = s.plane();
  std::vector<float> out(std::size_t(s.n) * m);
  std::vector<std::uint32_t> arg(out.size());
  for (int n = 0; n < s.n; ++n)
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = std::size_t(n) * std::size_t(s.c) * m + i;
      for (int c = 1; c < s.c; ++c) {
        const std::size_t cand = (std::size_t(n) * std::size_t(s.c) + std::size_t(c)) * m + i;
        if (x.data()[cand] > x.data()[best]) best = cand;
      }
      out[std::size_t(n) * m + i] = x.data()[best];
      arg[std::size_t(n) * m + i] = std::uint32_t(best);
    }
  return make_result({s.n, 1, s.h, s.w}, std::move(out), {x}, [arg = std::move(arg)](detail::Node& self) {
    auto& d = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < arg.size(); ++i) d[arg[i]] += self.grad[i];
  });
}

}  // namespace sinusseg::nets

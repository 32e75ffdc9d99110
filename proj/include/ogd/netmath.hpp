// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ogd/geometry.hpp"
#include "ogd/occlusion_map.hpp"
#include "ogd/rng.hpp"
#include "ogd/tensor.hpp"

namespace ogd {

// ---------------------------------------------------------------------------
// Deterministic weight initialization. No training happens here; weights are
// reproducible functions of a 64-bit seed so forward outputs are stable
// across platforms.
// ---------------------------------------------------------------------------

struct Conv2dWeights {
  int in_ch = 0, out_ch = 0, ksize = 1;
  std::vector<double> kernel;  // [out][in][ky][kx]
  std::vector<double> bias;    // [out]

  double k_at(int o, int i, int ky, int kx) const {
    return kernel[((static_cast<std::size_t>(o) * in_ch + i) * ksize + ky) * ksize + kx];
  }
  double& k_at(int o, int i, int ky, int kx) {
    return kernel[((static_cast<std::size_t>(o) * in_ch + i) * ksize + ky) * ksize + kx];
  }
};

struct DepthwiseWeights {
  int ch = 0, ksize = 1;
  std::vector<double> kernel;  // [ch][ky][kx]
  std::vector<double> bias;    // [ch]

  double k_at(int ch_i, int ky, int kx) const {
    return kernel[(static_cast<std::size_t>(ch_i) * ksize + ky) * ksize + kx];
  }
  double& k_at(int ch_i, int ky, int kx) {
    return kernel[(static_cast<std::size_t>(ch_i) * ksize + ky) * ksize + kx];
  }
};

inline Conv2dWeights make_conv2d_weights(int in_ch, int out_ch, int ksize, SeededRng& rng) {
  if (in_ch < 1 || out_ch < 1 || ksize < 1)
    throw std::invalid_argument("make_conv2d_weights: bad dims");
  Conv2dWeights w;
  w.in_ch = in_ch;
  w.out_ch = out_ch;
  w.ksize = ksize;
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_ch) * ksize * ksize);
  w.kernel.resize(static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize);
  w.bias.resize(static_cast<std::size_t>(out_ch));
  for (double& v : w.kernel) v = rng.next_uniform(-scale, scale);
  for (double& v : w.bias) v = rng.next_uniform(-scale, scale);
  return w;
}

/// Identity kernel: out channel o passes in channel o through (requires
/// in_ch == out_ch), bias 0. Center tap 1, everything else 0.
inline Conv2dWeights identity_conv2d(int ch, int ksize) {
  if (ksize % 2 == 0) throw std::invalid_argument("identity_conv2d: ksize must be odd");
  Conv2dWeights w;
  w.in_ch = w.out_ch = ch;
  w.ksize = ksize;
  w.kernel.assign(static_cast<std::size_t>(ch) * ch * ksize * ksize, 0.0);
  w.bias.assign(static_cast<std::size_t>(ch), 0.0);
  const int mid = ksize / 2;
  for (int o = 0; o < ch; ++o) w.k_at(o, o, mid, mid) = 1.0;
  return w;
}

inline DepthwiseWeights make_depthwise_weights(int ch, int ksize, SeededRng& rng) {
  if (ch < 1 || ksize < 1) throw std::invalid_argument("make_depthwise_weights: bad dims");
  DepthwiseWeights w;
  w.ch = ch;
  w.ksize = ksize;
  const double scale = 1.0 / static_cast<double>(ksize);
  w.kernel.resize(static_cast<std::size_t>(ch) * ksize * ksize);
  w.bias.resize(static_cast<std::size_t>(ch));
  for (double& v : w.kernel) v = rng.next_uniform(-scale, scale);
  for (double& v : w.bias) v = rng.next_uniform(-scale, scale);
  return w;
}

inline DepthwiseWeights identity_depthwise(int ch, int ksize) {
  if (ksize % 2 == 0) throw std::invalid_argument("identity_depthwise: ksize must be odd");
  DepthwiseWeights w;
  w.ch = ch;
  w.ksize = ksize;
  w.kernel.assign(static_cast<std::size_t>(ch) * ksize * ksize, 0.0);
  w.bias.assign(static_cast<std::size_t>(ch), 0.0);
  const int mid = ksize / 2;
  for (int c = 0; c < ch; ++c) w.k_at(c, mid, mid) = 1.0;
  return w;
}

// ---------------------------------------------------------------------------
// Forward primitives. All convolutions are stride-1 with zero padding that
// preserves spatial dims.
// ---------------------------------------------------------------------------

inline Tensor4 conv2d(const Tensor4& x, const Conv2dWeights& w) {
  if (x.c != w.in_ch) throw std::invalid_argument("conv2d: channel mismatch");
  const int pad = w.ksize / 2;
  Tensor4 out(x.n, w.out_ch, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < w.out_ch; ++o)
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          double acc = w.bias[static_cast<std::size_t>(o)];
          for (int i = 0; i < w.in_ch; ++i)
            for (int ky = 0; ky < w.ksize; ++ky) {
              const int sy = y + ky - pad;
              if (sy < 0 || sy >= x.h) continue;
              for (int kx = 0; kx < w.ksize; ++kx) {
                const int sx = xx + kx - pad;
                if (sx < 0 || sx >= x.w) continue;
                acc += w.k_at(o, i, ky, kx) * x.at(n, i, sy, sx);
              }
            }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

inline Tensor4 depthwise_conv2d(const Tensor4& x, const DepthwiseWeights& w) {
  if (x.c != w.ch) throw std::invalid_argument("depthwise_conv2d: channel mismatch");
  const int pad = w.ksize / 2;
  Tensor4 out(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          double acc = w.bias[static_cast<std::size_t>(c)];
          for (int ky = 0; ky < w.ksize; ++ky) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= x.h) continue;
            for (int kx = 0; kx < w.ksize; ++kx) {
              const int sx = xx + kx - pad;
              if (sx < 0 || sx >= x.w) continue;
              acc += w.k_at(c, ky, kx) * x.at(n, c, sy, sx);
            }
          }
          out.at(n, c, y, xx) = acc;
        }
  return out;
}

inline Tensor4 relu(Tensor4 x) {
  for (double& v : x.data) v = std::max(v, 0.0);
  return x;
}

/// Channel-to-space rearrangement: (n, c, h, w) -> (n, c/r^2, h*r, w*r) with
/// out[n][k][i*r+di][j*r+dj] = in[n][k*r^2 + di*r + dj][i][j]. Bijective.
inline Tensor4 pixel_shuffle(const Tensor4& x, int r) {
  if (r < 1) throw std::invalid_argument("pixel_shuffle: r must be >= 1");
  if (x.c % (r * r) != 0)
    throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
  if (r == 1) return x;
  Tensor4 out(x.n, x.c / (r * r), x.h * r, x.w * r);
  for (int n = 0; n < x.n; ++n)
    for (int k = 0; k < out.c; ++k)
      for (int di = 0; di < r; ++di)
        for (int dj = 0; dj < r; ++dj) {
          const int src_c = k * r * r + di * r + dj;
          for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j)
              out.at(n, k, i * r + di, j * r + dj) = x.at(n, src_c, i, j);
        }
  return out;
}

/// Exact inverse of pixel_shuffle.
inline Tensor4 pixel_unshuffle(const Tensor4& x, int r) {
  if (r < 1) throw std::invalid_argument("pixel_unshuffle: r must be >= 1");
  if (x.h % r != 0 || x.w % r != 0)
    throw std::invalid_argument("pixel_unshuffle: spatial dims not divisible by r");
  if (r == 1) return x;
  Tensor4 out(x.n, x.c * r * r, x.h / r, x.w / r);
  for (int n = 0; n < x.n; ++n)
    for (int k = 0; k < x.c; ++k)
      for (int di = 0; di < r; ++di)
        for (int dj = 0; dj < r; ++dj) {
          const int dst_c = k * r * r + di * r + dj;
          for (int i = 0; i < out.h; ++i)
            for (int j = 0; j < out.w; ++j)
              out.at(n, dst_c, i, j) = x.at(n, k, i * r + di, j * r + dj);
        }
  return out;
}

/// Split-transform-merge mixing block: the first half of the channels passes
/// through untouched; the second half goes through a 3x3 conv + ReLU. Output
/// dims equal input dims.
struct CspWeights {
  Conv2dWeights conv;  // (c/2) -> (c/2), 3x3
};

inline CspWeights make_csp_weights(int channels, SeededRng& rng) {
  if (channels < 2 || channels % 2 != 0)
    throw std::invalid_argument("make_csp_weights: channels must be even and >= 2");
  return CspWeights{make_conv2d_weights(channels / 2, channels / 2, 3, rng)};
}

inline Tensor4 csp_mix(const Tensor4& x, const CspWeights& w) {
  if (x.c % 2 != 0) throw std::invalid_argument("csp_mix: channel count must be even");
  const int half = x.c / 2;
  if (w.conv.in_ch != half || w.conv.out_ch != half)
    throw std::invalid_argument("csp_mix: weights sized for a different channel count");

  Tensor4 lower(x.n, half, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < half; ++c)
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) lower.at(n, c, y, xx) = x.at(n, half + c, y, xx);

  const Tensor4 mixed = relu(conv2d(lower, w.conv));

  Tensor4 out(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < half; ++c)
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          out.at(n, c, y, xx) = x.at(n, c, y, xx);
          out.at(n, half + c, y, xx) = mixed.at(n, c, y, xx);
        }
  return out;
}

// ---------------------------------------------------------------------------
// Occlusion-map decoder path: p_stages repetitions of [pixel_shuffle(2) ->
// 1x1 width transition + ReLU -> csp_mix], then a 1-channel projection and a
// clamp to [0,1]. The per-stage channel width after the transition conv is a
// parameter; the mixing block needs an even width and the next shuffle needs
// a multiple of 4, so the default width is 4.
// ---------------------------------------------------------------------------

struct OemWeights {
  int p_stages = 0;
  int stage_width = 4;
  std::vector<Conv2dWeights> widen;  // per stage, 1x1 (c_in -> stage_width)
  std::vector<CspWeights> mix;       // per stage, at stage_width
  Conv2dWeights proj;                // 1x1 (last width -> 1)
};

inline OemWeights make_oem_weights(int in_channels, int p_stages, std::uint64_t seed,
                                   int stage_width = 4) {
  if (in_channels < 1) throw std::invalid_argument("make_oem_weights: in_channels must be >= 1");
  if (p_stages < 0) throw std::invalid_argument("make_oem_weights: p_stages must be >= 0");
  if (p_stages > 0 && (stage_width < 2 || stage_width % 2 != 0))
    throw std::invalid_argument("make_oem_weights: stage_width must be even and >= 2");
  if (p_stages > 1 && stage_width % 4 != 0)
    throw std::invalid_argument("make_oem_weights: stage_width must be divisible by 4 with multiple stages");

  SeededRng rng(seed);
  OemWeights w;
  w.p_stages = p_stages;
  w.stage_width = stage_width;
  int c = in_channels;
  for (int p = 0; p < p_stages; ++p) {
    if (c % 4 != 0)
      throw std::invalid_argument("make_oem_weights: channels not divisible by 4 at stage " +
                                  std::to_string(p));
    c /= 4;  // pixel_shuffle(2)
    w.widen.push_back(make_conv2d_weights(c, stage_width, 1, rng));
    w.mix.push_back(make_csp_weights(stage_width, rng));
    c = stage_width;
  }
  w.proj = make_conv2d_weights(c, 1, 1, rng);
  return w;
}

/// Toy occlusion-estimation forward pass over a single-image batch. The
/// returned map has grid dims (h * 2^p, w * 2^p) and covers an image of those
/// dims times `out_stride`.
inline OcclusionMap oem_forward(const Tensor4& f, const OemWeights& w, int out_stride = 1) {
  if (f.n != 1) throw std::invalid_argument("oem_forward: expects a single-image batch");
  if (out_stride < 1) throw std::invalid_argument("oem_forward: out_stride must be >= 1");
  Tensor4 x = f;
  for (int p = 0; p < w.p_stages; ++p) {
    x = pixel_shuffle(x, 2);
    x = relu(conv2d(x, w.widen[static_cast<std::size_t>(p)]));
    x = csp_mix(x, w.mix[static_cast<std::size_t>(p)]);
  }
  x = conv2d(x, w.proj);

  OcclusionMap map(x.w * out_stride, x.h * out_stride, out_stride);
  for (int r = 0; r < map.rows; ++r)
    for (int c = 0; c < map.cols; ++c) map.at(r, c) = std::clamp(x.at(0, 0, r, c), 0.0, 1.0);
  return map;
}

// ---------------------------------------------------------------------------
// Decoupled detection-head feature paths: concatenate the (nearest-resampled)
// occlusion map as an extra channel, fuse with a 1x1 conv + per-channel
// affine + ReLU to get the localization features; the classification features
// additionally pass a large-kernel depthwise conv + ReLU.
// ---------------------------------------------------------------------------

struct DecoupleWeights {
  Conv2dWeights fuse;             // 1x1, (c_in + 1) -> c_out
  std::vector<double> bn_scale;   // [c_out], batch norm folded to affine
  std::vector<double> bn_shift;   // [c_out]
  DepthwiseWeights lk;            // depthwise, odd ksize
};

inline DecoupleWeights make_decouple_weights(int in_ch, int out_ch, int lk_kernel,
                                             std::uint64_t seed) {
  if (lk_kernel % 2 == 0) throw std::invalid_argument("make_decouple_weights: lk_kernel must be odd");
  SeededRng rng(seed);
  DecoupleWeights w;
  w.fuse = make_conv2d_weights(in_ch + 1, out_ch, 1, rng);
  w.bn_scale.resize(static_cast<std::size_t>(out_ch));
  w.bn_shift.resize(static_cast<std::size_t>(out_ch));
  for (double& v : w.bn_scale) v = rng.next_uniform(0.5, 1.5);
  for (double& v : w.bn_shift) v = rng.next_uniform(-0.1, 0.1);
  w.lk = make_depthwise_weights(out_ch, lk_kernel, rng);
  return w;
}

/// Nearest-neighbor resample of a map grid onto an (h, w) plane.
inline Tensor4 resample_map_nearest(const OcclusionMap& map, int h, int w) {
  Tensor4 out(1, 1, h, w);
  for (int y = 0; y < h; ++y) {
    const int sr = std::min(static_cast<int>((static_cast<long long>(y) * map.rows) / h), map.rows - 1);
    for (int x = 0; x < w; ++x) {
      const int sc = std::min(static_cast<int>((static_cast<long long>(x) * map.cols) / w), map.cols - 1);
      out.at(0, 0, y, x) = map.at(sr, sc);
    }
  }
  return out;
}

inline std::pair<Tensor4, Tensor4> decouple_features(const Tensor4& f, const OcclusionMap& occ,
                                                     const DecoupleWeights& w) {
  if (w.lk.ksize % 2 == 0) throw std::invalid_argument("decouple_features: lk kernel must be odd");
  if (w.fuse.in_ch != f.c + 1)
    throw std::invalid_argument("decouple_features: fuse weights expect c_in + 1 channels");

  const Tensor4 occ_plane = resample_map_nearest(occ, f.h, f.w);
  Tensor4 cat(f.n, f.c + 1, f.h, f.w);
  for (int n = 0; n < f.n; ++n) {
    for (int c = 0; c < f.c; ++c)
      for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) cat.at(n, c, y, x) = f.at(n, c, y, x);
    for (int y = 0; y < f.h; ++y)
      for (int x = 0; x < f.w; ++x) cat.at(n, f.c, y, x) = occ_plane.at(0, 0, y, x);
  }

  Tensor4 fused = conv2d(cat, w.fuse);
  for (int n = 0; n < fused.n; ++n)
    for (int c = 0; c < fused.c; ++c)
      for (int y = 0; y < fused.h; ++y)
        for (int x = 0; x < fused.w; ++x)
          fused.at(n, c, y, x) =
              fused.at(n, c, y, x) * w.bn_scale[static_cast<std::size_t>(c)] +
              w.bn_shift[static_cast<std::size_t>(c)];

  Tensor4 f_loc = relu(std::move(fused));
  Tensor4 f_cls = relu(depthwise_conv2d(f_loc, w.lk));
  return {std::move(f_cls), std::move(f_loc)};
}

// ---------------------------------------------------------------------------
// Training losses. Per-sample summation order is fixed, so results do not
// depend on thread count.
// ---------------------------------------------------------------------------

struct LossWeights {
  double lambda_occ = 1.0;
  double lambda_cls = 1.0;
  double lambda_loc = 0.5;
};

struct OccLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d pred, row-major over cells
};

/// Mean squared error between predicted and truth maps, with its analytic
/// gradient 2 * (pred - truth) / num_cells.
inline OccLoss l_occ(const OcclusionMap& pred, const OcclusionMap& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols)
    throw std::invalid_argument("l_occ: map dims differ");
  OccLoss out;
  const std::size_t m = pred.values.size();
  out.grad.resize(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = pred.values[i] - truth.values[i];
    acc += d * d;
    out.grad[i] = 2.0 * d / static_cast<double>(m);
  }
  out.loss = acc / static_cast<double>(m);
  return out;
}

/// Occlusion-weighted cross-entropy averaged over samples. Probabilities are
/// clamped below at 1e-12 before the log.
inline double l_cls(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
                    const std::vector<double>& w_occ) {
  if (probs.size() != labels.size() || probs.size() != w_occ.size())
    throw std::invalid_argument("l_cls: size mismatch");
  if (probs.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const auto& p = probs[n];
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= p.size())
      throw std::invalid_argument("l_cls: label outside category range [0, " +
                                  std::to_string(p.size()) + ")");
    double sum = 0.0;
    for (double v : p) sum += v;
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("l_cls: probabilities of sample " + std::to_string(n) +
                                  " do not sum to 1");
    acc += w_occ[n] * -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-12));
  }
  return acc / static_cast<double>(probs.size());
}

inline double smooth_l1(double d, double beta) {
  const double a = std::abs(d);
  return a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
}

/// Occlusion-weighted smooth-L1 box loss, summed (not averaged) over samples.
inline double l_loc(std::span<const BBox> pred, std::span<const BBox> gt,
                    std::span<const double> w_occ, double beta = 1.0) {
  if (pred.size() != gt.size() || pred.size() != w_occ.size())
    throw std::invalid_argument("l_loc: size mismatch");
  if (beta <= 0.0) throw std::invalid_argument("l_loc: beta must be > 0");
  double acc = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double s = smooth_l1(pred[n].x - gt[n].x, beta) + smooth_l1(pred[n].y - gt[n].y, beta) +
                     smooth_l1(pred[n].w - gt[n].w, beta) + smooth_l1(pred[n].h - gt[n].h, beta);
    acc += w_occ[n] * s;
  }
  return acc;
}

inline double l_total(double occ, double cls, double loc, const LossWeights& w = {}) {
  return w.lambda_occ * occ + w.lambda_cls * cls + w.lambda_loc * loc;
}

}  // namespace ogd

// Copyright 2026 the ogd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ogd {

/// Dense NCHW tensor of doubles, row-major within each plane.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;

  Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n < 0 || c < 0 || h < 0 || w < 0)
      throw std::invalid_argument("Tensor4: dims must be nonnegative");
    data.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
  }

  std::size_t size() const { return data.size(); }

  std::size_t idx(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
  }

  double at(int in, int ic, int iy, int ix) const { return data[idx(in, ic, iy, ix)]; }
  double& at(int in, int ic, int iy, int ix) { return data[idx(in, ic, iy, ix)]; }

  bool same_dims(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

}  // namespace ogd

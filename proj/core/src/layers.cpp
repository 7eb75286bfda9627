/* Copyright 2026 The MSI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "msi/layers.hpp"

#include <algorithm>
#include <cmath>

#include "msi/error.hpp"

namespace msi::layers {

void conv2d_forward(const FeatureTensor& in, std::span<const double> weight,
                    std::span<const double> bias, int out_channels, int kernel,
                    FeatureTensor& out) {
  const int pad = kernel / 2;
  const int taps = kernel * kernel;
  if (weight.size() != static_cast<std::size_t>(out_channels) * in.channels * taps ||
      bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ShapeError("conv2d parameter size does not match " + std::to_string(in.channels) +
                     " -> " + std::to_string(out_channels) + " channels");
  }
  out = FeatureTensor(out_channels, in.height, in.width);
  for (int o = 0; o < out_channels; ++o) {
    double* dst = out.data.data() + static_cast<std::size_t>(o) * in.height * in.width;
    std::fill(dst, dst + in.height * in.width, bias[static_cast<std::size_t>(o)]);
    for (int i = 0; i < in.channels; ++i) {
      const double* w = weight.data() + (static_cast<std::size_t>(o) * in.channels + i) * taps;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const double wk = w[ky * kernel + kx];
          for (int y = 0; y < in.height; ++y) {
            const int iy = std::clamp(y + ky - pad, 0, in.height - 1);
            for (int x = 0; x < in.width; ++x) {
              const int ix = std::clamp(x + kx - pad, 0, in.width - 1);
              dst[y * in.width + x] += wk * in.at(i, iy, ix);
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const FeatureTensor& in, std::span<const double> weight,
                     const FeatureTensor& grad_out, int kernel, std::span<double> grad_weight,
                     std::span<double> grad_bias, FeatureTensor* grad_in) {
  const int pad = kernel / 2;
  const int taps = kernel * kernel;
  const int out_channels = grad_out.channels;
  if (grad_in != nullptr && grad_in->data.size() != in.data.size()) {
    *grad_in = FeatureTensor(in.channels, in.height, in.width);
  }
  for (int o = 0; o < out_channels; ++o) {
    const double* g = grad_out.data.data() + static_cast<std::size_t>(o) * in.height * in.width;
    double gb = 0.0;
    for (int j = 0; j < in.height * in.width; ++j) gb += g[j];
    grad_bias[static_cast<std::size_t>(o)] += gb;
    for (int i = 0; i < in.channels; ++i) {
      const std::size_t wbase = (static_cast<std::size_t>(o) * in.channels + i) * taps;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const double wk = weight[wbase + static_cast<std::size_t>(ky * kernel + kx)];
          double gw = 0.0;
          for (int y = 0; y < in.height; ++y) {
            const int iy = std::clamp(y + ky - pad, 0, in.height - 1);
            for (int x = 0; x < in.width; ++x) {
              const int ix = std::clamp(x + kx - pad, 0, in.width - 1);
              const double gv = g[y * in.width + x];
              gw += gv * in.at(i, iy, ix);
              if (grad_in != nullptr) grad_in->at(i, iy, ix) += gv * wk;
            }
          }
          grad_weight[wbase + static_cast<std::size_t>(ky * kernel + kx)] += gw;
        }
      }
    }
  }
}

void relu_inplace(FeatureTensor& x) {
  for (auto& v : x.data) v = std::max(v, 0.0);
}

void leaky_relu_inplace(FeatureTensor& x, double slope) {
  for (auto& v : x.data) {
    if (v < 0.0) v *= slope;
  }
}

void leaky_relu_backward(const FeatureTensor& activated, FeatureTensor& grad, double slope) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (activated.data[i] < 0.0) grad.data[i] *= slope;
  }
}

void relu_backward(const FeatureTensor& activated, FeatureTensor& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (activated.data[i] <= 0.0) grad.data[i] = 0.0;
  }
}

std::vector<BilinearResize::Tap> BilinearResize::taps(int in_size, int out_size) {
  std::vector<Tap> out(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_size - 1);
    out[static_cast<std::size_t>(i)] = Tap{lo, hi, src - lo};
  }
  return out;
}

BilinearResize::BilinearResize(int in_height, int in_width, int out_height, int out_width)
    : in_height_(in_height),
      in_width_(in_width),
      out_height_(out_height),
      out_width_(out_width),
      rows_(taps(in_height, out_height)),
      cols_(taps(in_width, out_width)) {}

FeatureTensor BilinearResize::forward(const FeatureTensor& in) const {
  FeatureTensor out(in.channels, out_height_, out_width_);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out_height_; ++y) {
      const auto& r = rows_[static_cast<std::size_t>(y)];
      for (int x = 0; x < out_width_; ++x) {
        const auto& k = cols_[static_cast<std::size_t>(x)];
        const double top = (1.0 - k.w_hi) * in.at(c, r.lo, k.lo) + k.w_hi * in.at(c, r.lo, k.hi);
        const double bot = (1.0 - k.w_hi) * in.at(c, r.hi, k.lo) + k.w_hi * in.at(c, r.hi, k.hi);
        out.at(c, y, x) = (1.0 - r.w_hi) * top + r.w_hi * bot;
      }
    }
  }
  return out;
}

FeatureTensor BilinearResize::backward(const FeatureTensor& grad_out) const {
  FeatureTensor grad(grad_out.channels, in_height_, in_width_);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int y = 0; y < out_height_; ++y) {
      const auto& r = rows_[static_cast<std::size_t>(y)];
      for (int x = 0; x < out_width_; ++x) {
        const auto& k = cols_[static_cast<std::size_t>(x)];
        const double g = grad_out.at(c, y, x);
        grad.at(c, r.lo, k.lo) += g * (1.0 - r.w_hi) * (1.0 - k.w_hi);
        grad.at(c, r.lo, k.hi) += g * (1.0 - r.w_hi) * k.w_hi;
        grad.at(c, r.hi, k.lo) += g * r.w_hi * (1.0 - k.w_hi);
        grad.at(c, r.hi, k.hi) += g * r.w_hi * k.w_hi;
      }
    }
  }
  return grad;
}

FeatureTensor concat_channels(const FeatureTensor& a, const FeatureTensor& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("concat: spatial dims differ");
  }
  FeatureTensor out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

void split_channels(const FeatureTensor& joined, int first_channels, FeatureTensor& a,
                    FeatureTensor& b) {
  a = FeatureTensor(first_channels, joined.height, joined.width);
  b = FeatureTensor(joined.channels - first_channels, joined.height, joined.width);
  const auto split = static_cast<std::ptrdiff_t>(a.data.size());
  std::copy(joined.data.begin(), joined.data.begin() + split, a.data.begin());
  std::copy(joined.data.begin() + split, joined.data.end(), b.data.begin());
}

void support_pool_forward(const CorrelationTensor& x, std::span<const double> weight,
                          std::span<const double> bias, int hidden, FeatureTensor& out,
                          std::vector<int>& argmax) {
  const int channels = x.channels;
  const int np = x.support_size();
  const int nq = x.query_size();
  if (weight.size() != static_cast<std::size_t>(hidden) * channels) {
    throw ShapeError("support pooling expects " + std::to_string(channels) +
                     " input channels per level");
  }
  out = FeatureTensor(2 * hidden, x.query_height, x.query_width);
  argmax.assign(static_cast<std::size_t>(hidden) * nq, 0);
  std::vector<double> z(static_cast<std::size_t>(nq));
  const double inv_np = 1.0 / np;
  for (int h = 0; h < hidden; ++h) {
    double* mean = out.data.data() + static_cast<std::size_t>(h) * nq;
    double* max = out.data.data() + static_cast<std::size_t>(hidden + h) * nq;
    int* arg = argmax.data() + static_cast<std::size_t>(h) * nq;
    std::fill(max, max + nq, -1.0);
    for (int p = 0; p < np; ++p) {
      std::fill(z.begin(), z.end(), bias[static_cast<std::size_t>(h)]);
      for (int c = 0; c < channels; ++c) {
        const double w = weight[static_cast<std::size_t>(h) * channels + c];
        const double* row = x.data.data() + c * x.channel_stride() + static_cast<std::size_t>(p) * nq;
        for (int q = 0; q < nq; ++q) z[static_cast<std::size_t>(q)] += w * row[q];
      }
      for (int q = 0; q < nq; ++q) {
        const double v = std::max(z[static_cast<std::size_t>(q)], 0.0);
        mean[q] += v;
        if (v > max[q]) {
          max[q] = v;
          arg[q] = p;
        }
      }
    }
    for (int q = 0; q < nq; ++q) mean[q] *= inv_np;
  }
}

void support_pool_backward(const CorrelationTensor& x, std::span<const double> weight,
                           std::span<const double> bias, int hidden,
                           const std::vector<int>& argmax, const FeatureTensor& grad_out,
                           std::span<double> grad_weight, std::span<double> grad_bias,
                           CorrelationTensor* grad_x) {
  const int channels = x.channels;
  const int np = x.support_size();
  const int nq = x.query_size();
  if (grad_x != nullptr && grad_x->data.size() != x.data.size()) {
    *grad_x = CorrelationTensor(channels, x.support_height, x.support_width, x.query_height,
                                x.query_width);
  }
  const double inv_np = 1.0 / np;
  std::vector<double> z(static_cast<std::size_t>(nq));
  std::vector<double> gz(static_cast<std::size_t>(nq));
  for (int h = 0; h < hidden; ++h) {
    const double* g_mean = grad_out.data.data() + static_cast<std::size_t>(h) * nq;
    const double* g_max = grad_out.data.data() + static_cast<std::size_t>(hidden + h) * nq;
    const int* arg = argmax.data() + static_cast<std::size_t>(h) * nq;
    double gb = 0.0;
    std::vector<double> gw(static_cast<std::size_t>(channels), 0.0);
    for (int p = 0; p < np; ++p) {
      std::fill(z.begin(), z.end(), bias[static_cast<std::size_t>(h)]);
      for (int c = 0; c < channels; ++c) {
        const double w = weight[static_cast<std::size_t>(h) * channels + c];
        const double* row = x.data.data() + c * x.channel_stride() + static_cast<std::size_t>(p) * nq;
        for (int q = 0; q < nq; ++q) z[static_cast<std::size_t>(q)] += w * row[q];
      }
      bool any = false;
      for (int q = 0; q < nq; ++q) {
        double g = 0.0;
        if (z[static_cast<std::size_t>(q)] > 0.0) {
          g = g_mean[q] * inv_np;
          if (arg[q] == p) g += g_max[q];
          any = true;
        }
        gz[static_cast<std::size_t>(q)] = g;
        gb += g;
      }
      if (!any) continue;
      for (int c = 0; c < channels; ++c) {
        const std::size_t offset = c * x.channel_stride() + static_cast<std::size_t>(p) * nq;
        const double* row = x.data.data() + offset;
        double acc = 0.0;
        for (int q = 0; q < nq; ++q) acc += gz[static_cast<std::size_t>(q)] * row[q];
        gw[static_cast<std::size_t>(c)] += acc;
        if (grad_x != nullptr) {
          const double w = weight[static_cast<std::size_t>(h) * channels + c];
          double* grow = grad_x->data.data() + offset;
          for (int q = 0; q < nq; ++q) grow[q] += w * gz[static_cast<std::size_t>(q)];
        }
      }
    }
    grad_bias[static_cast<std::size_t>(h)] += gb;
    for (int c = 0; c < channels; ++c) {
      grad_weight[static_cast<std::size_t>(h) * channels + c] += gw[static_cast<std::size_t>(c)];
    }
  }
}

}  // namespace msi::layers

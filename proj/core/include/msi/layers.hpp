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
#ifndef MSI_LAYERS_HPP_
#define MSI_LAYERS_HPP_

#include <span>
#include <vector>

#include "msi/correlation.hpp"
#include "msi/tensor.hpp"

// Forward and backward kernels for the segmentation head. All gradients
// accumulate (+=) into the caller's buffers.
namespace msi::layers {

// Stride-1 k x k convolution with replicate padding. Weight layout is
// [out][in][ky][kx].
void conv2d_forward(const FeatureTensor& in, std::span<const double> weight,
                    std::span<const double> bias, int out_channels, int kernel,
                    FeatureTensor& out);
void conv2d_backward(const FeatureTensor& in, std::span<const double> weight,
                     const FeatureTensor& grad_out, int kernel, std::span<double> grad_weight,
                     std::span<double> grad_bias, FeatureTensor* grad_in);

void relu_inplace(FeatureTensor& x);
// Zeroes grad where the post-activation value is not positive.
void relu_backward(const FeatureTensor& activated, FeatureTensor& grad);

// max(x, slope * x); the backward pass reads the sign of the activated output.
void leaky_relu_inplace(FeatureTensor& x, double slope);
void leaky_relu_backward(const FeatureTensor& activated, FeatureTensor& grad, double slope);

// Bilinear resize with half-pixel centers and edge clamping.
class BilinearResize {
 public:
  BilinearResize(int in_height, int in_width, int out_height, int out_width);

  FeatureTensor forward(const FeatureTensor& in) const;
  FeatureTensor backward(const FeatureTensor& grad_out) const;

 private:
  struct Tap {
    int lo;
    int hi;
    double w_hi;
  };
  static std::vector<Tap> taps(int in_size, int out_size);

  int in_height_, in_width_, out_height_, out_width_;
  std::vector<Tap> rows_, cols_;
};

FeatureTensor concat_channels(const FeatureTensor& a, const FeatureTensor& b);
void split_channels(const FeatureTensor& joined, int first_channels, FeatureTensor& a,
                    FeatureTensor& b);

// Pooled contraction over the support axes. For every hidden unit h and
// query position q:
//   z(h, p, q) = relu(sum_c weight[h][c] * x(c, p, q) + bias[h])
//   out(h, q)     = mean_p z(h, p, q)
//   out(H + h, q) = max_p  z(h, p, q)
// The output is a (2H) x query_height x query_width feature map. `argmax`
// receives the winning support position per (h, q) for the backward pass.
void support_pool_forward(const CorrelationTensor& x, std::span<const double> weight,
                          std::span<const double> bias, int hidden, FeatureTensor& out,
                          std::vector<int>& argmax);
void support_pool_backward(const CorrelationTensor& x, std::span<const double> weight,
                           std::span<const double> bias, int hidden,
                           const std::vector<int>& argmax, const FeatureTensor& grad_out,
                           std::span<double> grad_weight, std::span<double> grad_bias,
                           CorrelationTensor* grad_x);

}  // namespace msi::layers

#endif  // MSI_LAYERS_HPP_

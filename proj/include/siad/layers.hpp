#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "siad/tensor.hpp"

namespace siad {

// "Same" zero-padded 2-D convolution. input (C,H,W), kernel (O,C,k,k) with odd k.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias);

// Raw kernel used by both the tensor path and the parametric path. Writes
// (O,H,W) into out; adds bias when non-empty.
void conv2d_raw(const double* in, std::size_t channels, std::size_t height, std::size_t width, const Tensor& kernel,
                std::span<const double> bias, double* out);

// Half-open output window [y0, y1) x [x0, x1).
struct Box {
  std::size_t y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  std::size_t area() const noexcept { return (y1 - y0) * (x1 - x0); }
};

// Convolves an affine pair (offset, slope) in one pass, writing only the
// outputs inside `box`; entries outside it are set to zero. Bias goes to the
// offset only.
void conv2d_affine(const double* in_offset, const double* in_slope, std::size_t channels, std::size_t height,
                   std::size_t width, const Tensor& kernel, std::span<const double> bias, const Box& box,
                   double* out_offset, double* out_slope);

Tensor relu(const Tensor& input);

struct PoolResult {
  Tensor output;
  // Flat input index (c*H*W + y*W + x) of each window's winner; ties go to the
  // smallest row-major index.
  std::vector<std::uint32_t> argmax;
};

PoolResult maxpool2(const Tensor& input);
Tensor upsample_nearest(const Tensor& input);
Tensor concat_channels(const Tensor& first, const Tensor& second);

// y = W x + b with W stored (out, in).
std::vector<double> dense(const Tensor& weight, std::span<const double> bias, std::span<const double> x);

struct ConvGradients {
  Tensor input;
  Tensor kernel;
  std::vector<double> bias;
};

ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output);
Tensor maxpool2_backward(const Tensor& grad_output, const std::vector<std::uint32_t>& argmax,
                         const std::vector<std::size_t>& input_shape);
Tensor upsample_nearest_backward(const Tensor& grad_output);

}  // namespace siad

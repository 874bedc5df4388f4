#include "siad/layers.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Core>

#include "siad/error.hpp"

namespace siad {

namespace {

void require_image(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw InvalidInput(std::string(what) + ": expected a (C,H,W) tensor");
}

void check_kernel(const Tensor& kernel, std::size_t in_channels) {
  if (kernel.rank() != 4 || kernel.extent(2) != kernel.extent(3)) {
    throw InvalidInput("conv2d: kernel must be (O,C,k,k)");
  }
  if (kernel.extent(2) % 2 == 0) throw InvalidInput("conv2d: kernel side must be odd");
  if (kernel.extent(1) != in_channels) {
    throw InvalidInput("conv2d: input has " + std::to_string(in_channels) + " channels, kernel expects " +
                       std::to_string(kernel.extent(1)));
  }
}

}  // namespace

void conv2d_raw(const double* in, std::size_t channels, std::size_t height, std::size_t width, const Tensor& kernel,
                std::span<const double> bias, double* out) {
  const std::size_t outs = kernel.extent(0);
  const std::size_t k = kernel.extent(2);
  const long r = static_cast<long>(k / 2);
  const long H = static_cast<long>(height);
  const long W = static_cast<long>(width);
  const std::size_t plane = height * width;
  const double* kw = kernel.raw();

  for (std::size_t o = 0; o < outs; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, bias.empty() ? 0.0 : bias[o]);
    for (std::size_t c = 0; c < channels; ++c) {
      const double* src = in + c * plane;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long dy = static_cast<long>(ky) - r;
        const long y0 = std::max(0L, -dy);
        const long y1 = std::min(H, H - dy);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = kw[((o * channels + c) * k + ky) * k + kx];
          if (wv == 0.0) continue;
          const long dx = static_cast<long>(kx) - r;
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min(W, W - dx);
          for (long y = y0; y < y1; ++y) {
            double* row = dst + y * W;
            const double* srow = src + (y + dy) * W + dx;
            for (long x = x0; x < x1; ++x) row[x] += wv * srow[x];
          }
        }
      }
    }
  }
}

void conv2d_affine(const double* in_offset, const double* in_slope, std::size_t channels, std::size_t height,
                   std::size_t width, const Tensor& kernel, std::span<const double> bias, const Box& box,
                   double* out_offset, double* out_slope) {
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t outs = kernel.extent(0);
  const std::size_t k = kernel.extent(2);
  const long r = static_cast<long>(k / 2);
  const long H = static_cast<long>(height);
  const long W = static_cast<long>(width);
  const std::size_t plane = height * width;
  const std::size_t bw = box.x1 - box.x0;
  const std::size_t n = box.area();
  const std::size_t taps = channels * k * k;

  // Offset columns first, then slope columns.
  thread_local RowMatrix cols, prod;
  cols.resize(static_cast<Eigen::Index>(taps), static_cast<Eigen::Index>(2 * n));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((c * k + ky) * k + kx) * 2 * n;
        const long dy = static_cast<long>(ky) - r, dx = static_cast<long>(kx) - r;
        std::size_t j = 0;
        for (std::size_t y = box.y0; y < box.y1; ++y) {
          const long sy = static_cast<long>(y) + dy;
          for (std::size_t x = box.x0; x < box.x1; ++x, ++j) {
            const long sx = static_cast<long>(x) + dx;
            if (sy < 0 || sy >= H || sx < 0 || sx >= W) {
              row[j] = 0.0;
              row[n + j] = 0.0;
            } else {
              const std::size_t src = c * plane + static_cast<std::size_t>(sy * W + sx);
              row[j] = in_offset[src];
              row[n + j] = in_slope[src];
            }
          }
        }
      }
    }
  }
  const Eigen::Map<const RowMatrix> weights(kernel.raw(), static_cast<Eigen::Index>(outs),
                                            static_cast<Eigen::Index>(taps));
  prod.noalias() = weights * cols;

  std::fill(out_offset, out_offset + outs * plane, 0.0);
  std::fill(out_slope, out_slope + outs * plane, 0.0);
  for (std::size_t o = 0; o < outs; ++o) {
    const double b = bias.empty() ? 0.0 : bias[o];
    const double* po = prod.data() + o * 2 * n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dst = o * plane + (box.y0 + j / bw) * width + box.x0 + j % bw;
      out_offset[dst] = po[j] + b;
      out_slope[dst] = po[n + j];
    }
  }
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias) {
  require_image(input, "conv2d");
  check_kernel(kernel, input.channels());
  if (!bias.empty() && bias.size() != kernel.extent(0)) throw InvalidInput("conv2d: bias length mismatch");
  Tensor out = Tensor::image(kernel.extent(0), input.height(), input.width());
  conv2d_raw(input.raw(), input.channels(), input.height(), input.width(), kernel, bias, out.raw());
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

PoolResult maxpool2(const Tensor& input) {
  require_image(input, "maxpool2");
  const std::size_t C = input.channels(), H = input.height(), W = input.width();
  if (H % 2 != 0 || W % 2 != 0) throw InvalidInput("maxpool2: spatial extents must be even");
  PoolResult result{Tensor::image(C, H / 2, W / 2), std::vector<std::uint32_t>(C * (H / 2) * (W / 2))};
  std::size_t slot = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < H / 2; ++y) {
      for (std::size_t x = 0; x < W / 2; ++x, ++slot) {
        // Row-major scan with strict '>' keeps the smallest index on ties.
        std::size_t best = (c * H + 2 * y) * W + 2 * x;
        double best_v = input[best];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * H + 2 * y + dy) * W + 2 * x + dx;
            if (input[idx] > best_v) {
              best_v = input[idx];
              best = idx;
            }
          }
        }
        result.output[slot] = best_v;
        result.argmax[slot] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

Tensor upsample_nearest(const Tensor& input) {
  require_image(input, "upsample_nearest");
  const std::size_t C = input.channels(), H = input.height(), W = input.width();
  Tensor out = Tensor::image(C, 2 * H, 2 * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t x = 0; x < 2 * W; ++x) out.at(c, y, x) = input.at(c, y / 2, x / 2);
  return out;
}

Tensor concat_channels(const Tensor& first, const Tensor& second) {
  require_image(first, "concat");
  require_image(second, "concat");
  if (first.height() != second.height() || first.width() != second.width()) {
    throw InvalidInput("concat: spatial extents differ");
  }
  std::vector<double> data(first.data());
  data.insert(data.end(), second.data().begin(), second.data().end());
  return Tensor({first.channels() + second.channels(), first.height(), first.width()}, std::move(data));
}

std::vector<double> dense(const Tensor& weight, std::span<const double> bias, std::span<const double> x) {
  if (weight.rank() != 2 || weight.extent(1) != x.size()) throw InvalidInput("dense: input length mismatch");
  const std::size_t outs = weight.extent(0), ins = weight.extent(1);
  if (bias.size() != outs) throw InvalidInput("dense: bias length mismatch");
  std::vector<double> y(outs);
  for (std::size_t o = 0; o < outs; ++o) {
    double acc = bias[o];
    const double* row = weight.raw() + o * ins;
    for (std::size_t i = 0; i < ins; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  return y;
}

ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output) {
  const std::size_t C = input.channels(), H = input.height(), W = input.width();
  const std::size_t O = kernel.extent(0), k = kernel.extent(2);
  const long r = static_cast<long>(k / 2);
  ConvGradients g{Tensor(input.shape()), Tensor(kernel.shape()), std::vector<double>(O, 0.0)};
  const std::size_t plane = H * W;
  for (std::size_t o = 0; o < O; ++o) {
    const double* go = grad_output.raw() + o * plane;
    for (std::size_t i = 0; i < plane; ++i) g.bias[o] += go[i];
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = input.raw() + c * plane;
      double* gin = g.input.raw() + c * plane;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const long dy = static_cast<long>(ky) - r;
        const long y0 = std::max(0L, -dy), y1 = std::min<long>(H, H - dy);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const long dx = static_cast<long>(kx) - r;
          const long x0 = std::max(0L, -dx), x1 = std::min<long>(W, W - dx);
          const std::size_t widx = ((o * C + c) * k + ky) * k + kx;
          const double wv = kernel[widx];
          double acc = 0.0;
          for (long y = y0; y < y1; ++y) {
            const double* grow = go + y * W;
            const double* srow = src + (y + dy) * W + dx;
            double* girow = gin + (y + dy) * W + dx;
            for (long x = x0; x < x1; ++x) {
              acc += grow[x] * srow[x];
              girow[x] += wv * grow[x];
            }
          }
          g.kernel[widx] += acc;
        }
      }
    }
  }
  return g;
}

Tensor maxpool2_backward(const Tensor& grad_output, const std::vector<std::uint32_t>& argmax,
                         const std::vector<std::size_t>& input_shape) {
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_output[i];
  return g;
}

Tensor upsample_nearest_backward(const Tensor& grad_output) {
  const std::size_t C = grad_output.channels(), H = grad_output.height() / 2, W = grad_output.width() / 2;
  Tensor g = Tensor::image(C, H, W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t x = 0; x < 2 * W; ++x) g.at(c, y / 2, x / 2) += grad_output.at(c, y, x);
  return g;
}

}  // namespace siad

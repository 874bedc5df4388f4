#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "siad/cvae.hpp"

namespace siad {

// Input image restricted to the line x(z) = a + b z, z in [z_lo, z_hi].
struct AffineLine {
  std::vector<double> a;
  std::vector<double> b;
  double z_lo = 0.0;
  double z_hi = 0.0;

  void validate(std::size_t pixels) const;
  std::vector<double> at(double z) const;
};

// On [lo, hi] the reconstruction equals recon_offset + recon_slope * z.
struct PiecewisePiece {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> recon_offset;
  std::vector<double> recon_slope;
};

struct ParametricOptions {
  std::size_t max_pieces = 1'000'000;
  // Row-major pixel indices of interest; empty means every pixel. When set,
  // decoder units outside the outputs' receptive field are not tracked, so
  // pieces may be coarser and only the listed reconstruction entries are valid.
  std::vector<std::size_t> outputs;
};

// A (C,H,W) activation whose entries are affine in z.
struct AffineMap {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> offset;
  std::vector<double> slope;

  AffineMap() = default;
  AffineMap(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), offset(c * h * w, 0.0), slope(c * h * w, 0.0) {}
  std::size_t size() const noexcept { return offset.size(); }
  double value(std::size_t i, double z) const noexcept { return offset[i] + slope[i] * z; }
};

namespace parametric {

// Boundary tolerance: crossings closer than this to the current z are skipped.
inline double step_tolerance(double z) { return 1e-12 * (z < 0 ? (-z > 1 ? -z : 1) : (z > 1 ? z : 1)); }

// Applies relu in place using the activation pattern just to the right of z
// (exact zeros resolved by the sign of the slope). Returns the smallest z'
// beyond z + step_tolerance(z) at which some unit changes sign, or +inf.
double relu_right_limit(std::span<double> offset, std::span<double> slope, double z);

// 2x2 max pool with winners chosen just to the right of z (ties: larger
// slope, then smallest row-major index). Returns the next winner change.
double maxpool_right_limit(const AffineMap& in, AffineMap& out, double z);

}  // namespace parametric

// Streams the exact piecewise-affine decomposition of cvae_infer(a + b z)
// over the line's window, in increasing z. Each relu sign and maxpool winner
// is constant on every piece's interior.
void for_each_piece(const AffineLine& line, std::span<const double> cond, const ModelWeights& w,
                    const std::function<void(const PiecewisePiece&)>& visit, const ParametricOptions& opts = {});

std::vector<PiecewisePiece> parametric_infer(const AffineLine& line, std::span<const double> cond,
                                             const ModelWeights& w, const ParametricOptions& opts = {});

}  // namespace siad

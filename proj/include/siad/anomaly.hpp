#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "siad/cvae.hpp"
#include "siad/tensor.hpp"

namespace siad {

// The image under test, X = s + eps. Stored as a (1, side, side) tensor.
struct FlowImage {
  Tensor values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// Region of interest within which detection and testing happen.
class RoiMask {
 public:
  RoiMask(std::size_t pixels, std::vector<std::size_t> members);

  // Centered square covering `fraction` of a side x side image.
  static RoiMask centered_square(std::size_t side, double fraction = 0.25);
  static RoiMask full(std::size_t pixels);
  // Values must be exactly 0.0 or 1.0.
  static RoiMask from_tensor(const Tensor& t);
  Tensor to_tensor(std::size_t side) const;

  std::size_t pixels() const noexcept { return member_.size(); }
  std::size_t count() const noexcept { return indices_.size(); }
  bool contains(std::size_t i) const { return member_.at(i) != 0; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  std::vector<std::uint8_t> member_;
  std::vector<std::size_t> indices_;
};

struct Threshold {
  double value = 0.0;
  double source_quantile = 0.95;
  std::size_t calibration_count = 0;
};

// Sorted, duplicate-free pixel indices inside the ROI.
struct AnomalyMask {
  std::vector<std::size_t> pixels;

  std::size_t size() const noexcept { return pixels.size(); }
  bool empty() const noexcept { return pixels.empty(); }
  friend bool operator==(const AnomalyMask&, const AnomalyMask&) = default;
};

// Signed x - recon.
Tensor reconstruction_error(const Tensor& x, const Tensor& recon);

// Nearest-rank q-quantile (rank ceil(q N)) of |error| pooled over the ROI
// pixels of every healthy map.
Threshold calibrate_threshold(std::span<const Tensor> healthy_errors, const RoiMask& roi, double q);

// Pixels i in the ROI with |error_i| > t (strict).
AnomalyMask extract_mask(const Tensor& error, const Threshold& t, const RoiMask& roi);

AnomalyMask detect(const FlowImage& x, std::span<const double> cond, const ModelWeights& w, const Threshold& t,
                   const RoiMask& roi);

}  // namespace siad

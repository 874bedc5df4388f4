#include "siad/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "siad/error.hpp"

namespace siad {

RoiMask::RoiMask(std::size_t pixels, std::vector<std::size_t> members) : member_(pixels, 0) {
  for (std::size_t i : members) {
    if (i >= pixels) throw InvalidInput("ROI member " + std::to_string(i) + " is outside the image");
    member_[i] = 1;
  }
  for (std::size_t i = 0; i < pixels; ++i)
    if (member_[i]) indices_.push_back(i);
  if (indices_.size() < 2) throw InvalidInput("ROI needs at least two pixels");
}

RoiMask RoiMask::centered_square(std::size_t side, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("ROI fraction must be in (0, 1]");
  const auto sq = static_cast<std::size_t>(std::lround(static_cast<double>(side) * std::sqrt(fraction)));
  const std::size_t start = (side - sq) / 2;
  std::vector<std::size_t> members;
  for (std::size_t y = start; y < start + sq; ++y)
    for (std::size_t x = start; x < start + sq; ++x) members.push_back(y * side + x);
  return RoiMask(side * side, std::move(members));
}

RoiMask RoiMask::full(std::size_t pixels) {
  std::vector<std::size_t> members(pixels);
  for (std::size_t i = 0; i < pixels; ++i) members[i] = i;
  return RoiMask(pixels, std::move(members));
}

RoiMask RoiMask::from_tensor(const Tensor& t) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1.0) {
      members.push_back(i);
    } else if (t[i] != 0.0) {
      throw InvalidInput("ROI map values must be 0 or 1");
    }
  }
  return RoiMask(t.size(), std::move(members));
}

Tensor RoiMask::to_tensor(std::size_t side) const {
  if (side * side != pixels()) throw InvalidInput("ROI side does not match its pixel count");
  Tensor t = Tensor::image(1, side, side);
  for (std::size_t i : indices_) t[i] = 1.0;
  return t;
}

Tensor reconstruction_error(const Tensor& x, const Tensor& recon) {
  if (x.size() != recon.size()) throw InvalidInput("reconstruction_error: sizes differ");
  Tensor e = x;
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = x[i] - recon[i];
  return e;
}

Threshold calibrate_threshold(std::span<const Tensor> healthy_errors, const RoiMask& roi, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("calibrate_threshold: quantile must be in (0, 1)");
  std::vector<double> pool;
  for (const Tensor& e : healthy_errors) {
    if (e.size() != roi.pixels()) throw InvalidInput("calibrate_threshold: error map does not match ROI");
    for (std::size_t i : roi.indices()) pool.push_back(std::abs(e[i]));
  }
  if (pool.empty()) throw InvalidInput("calibrate_threshold: no healthy errors to pool");
  const auto n = static_cast<double>(pool.size());
  // The offset absorbs representation error in q (0.95 * 100 must rank 95).
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, pool.size());
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rank - 1), pool.end());
  return {pool[rank - 1], q, pool.size()};
}

AnomalyMask extract_mask(const Tensor& error, const Threshold& t, const RoiMask& roi) {
  if (error.size() != roi.pixels()) throw InvalidInput("extract_mask: error map does not match ROI");
  AnomalyMask m;
  for (std::size_t i : roi.indices())
    if (std::abs(error[i]) > t.value) m.pixels.push_back(i);
  return m;
}

AnomalyMask detect(const FlowImage& x, std::span<const double> cond, const ModelWeights& w, const Threshold& t,
                   const RoiMask& roi) {
  const Tensor recon = cvae_infer(x.values, cond, w);
  return extract_mask(reconstruction_error(x.values, recon), t, roi);
}

}  // namespace siad

#include "siad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "siad/error.hpp"
#include "siad/random.hpp"

namespace siad {

void SignalSpec::validate(const RoiMask& roi) const {
  if (region.empty()) throw InvalidInput("signal region is empty");
  for (std::size_t i : region)
    if (i >= roi.pixels() || !roi.contains(i)) throw InvalidInput("signal region leaves the ROI");
  if (!std::isfinite(amplitude)) throw InvalidInput("signal amplitude must be finite");
}

std::vector<double> SignalSpec::signal(std::size_t pixels) const {
  std::vector<double> s(pixels, 0.0);
  std::vector<std::size_t> sorted = region;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k] >= pixels) throw InvalidInput("signal region leaves the image");
    s[sorted[k]] = shape == Shape::Plateau
                       ? amplitude
                       : amplitude * static_cast<double>(k + 1) / static_cast<double>(sorted.size());
  }
  return s;
}

std::vector<std::size_t> centered_block(std::size_t side, std::size_t block) {
  if (block == 0 || block > side) throw InvalidInput("signal block must fit in the image");
  const std::size_t start = (side - block) / 2;
  std::vector<std::size_t> out;
  for (std::size_t y = start; y < start + block; ++y)
    for (std::size_t x = start; x < start + block; ++x) out.push_back(y * side + x);
  return out;
}

void CohortSpec::validate() const {
  if (!(sigma2 > 0.0)) throw InvalidInput("cohort noise variance must be positive");
  if (!std::isfinite(signal.amplitude)) throw InvalidInput("signal amplitude must be finite");
  if (side == 0) throw InvalidInput("cohort image side must be positive");
}

CohortSpec CohortSpec::desk() {
  CohortSpec c;
  c.signal.region = centered_block(c.side, 4);
  c.signal.amplitude = 2.0;
  return c;
}

CohortSpec CohortSpec::paper() {
  CohortSpec c;
  c.side = 80;
  c.n_healthy_train = 600;
  c.n_healthy_test = 100;
  c.n_inference = 100;
  c.n_variance = 88;
  c.n_diseased = 110;
  c.signal.region = centered_block(c.side, 20);
  c.signal.amplitude = 2.0;
  return c;
}

const char* role_name(CohortRole role) {
  switch (role) {
    case CohortRole::Train: return "train";
    case CohortRole::Test: return "test";
    case CohortRole::Inference: return "inference";
    case CohortRole::Variance: return "variance";
    case CohortRole::Diseased: return "diseased";
    case CohortRole::Null: return "null";
  }
  return "unknown";
}

std::vector<FlowImage> gen_null_cohort(std::size_t count, std::size_t side, double sigma2, std::uint64_t seed,
                                       std::uint64_t stream) {
  if (!(sigma2 > 0.0)) throw InvalidInput("noise variance must be positive");
  const double sigma = std::sqrt(sigma2);
  const RandomStream root(seed);
  std::vector<FlowImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const RandomStream s = root.derive({0x401e, stream, i});
    Tensor t = Tensor::image(1, side, side);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = sigma * s.normal_at(j);
    out.push_back({std::move(t)});
  }
  return out;
}

DiseasedCohort gen_diseased(std::size_t count, std::size_t side, const SignalSpec& signal, double sigma2,
                            std::uint64_t seed, std::uint64_t stream) {
  DiseasedCohort out{gen_null_cohort(count, side, sigma2, seed, stream), signal.region};
  std::sort(out.region.begin(), out.region.end());
  const std::vector<double> s = signal.signal(side * side);
  for (auto& img : out.images)
    for (std::size_t j = 0; j < s.size(); ++j) img.values[j] += s[j];
  return out;
}

std::vector<Conditions> gen_conditions(std::size_t count, std::pair<double, double> age_range,
                                       std::pair<double, double> gap_range, std::uint64_t seed,
                                       std::uint64_t stream) {
  const RandomStream root(seed);
  std::vector<Conditions> out;
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream s = root.derive({0xc0d, stream, i});
    Conditions c;
    c.age = s.uniform(age_range.first, age_range.second);
    c.time_gap = s.uniform(gap_range.first, gap_range.second);
    out.push_back(c);
  }
  return out;
}

namespace {

struct Blob {
  double cx, cy, sigma, amplitude;
};

Tensor render(const std::vector<Blob>& blobs, std::size_t side) {
  Tensor t = Tensor::image(1, side, side);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      double v = 0.0;
      for (const Blob& b : blobs) {
        const double dx = static_cast<double>(x) - b.cx, dy = static_cast<double>(y) - b.cy;
        v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      t.at(0, y, x) = v;
    }
  return t;
}

}  // namespace

std::vector<SyntheticPair> gen_image_pairs(std::size_t count, std::size_t side, const MotionSpec& motion,
                                           std::uint64_t seed) {
  if (side < 4) throw InvalidInput("image pairs need a side of at least 4");
  if (!(1.0 + motion.dilation > 0.0)) throw InvalidInput("dilation must keep the scale positive");
  const RandomStream root(seed);
  const double c = 0.5 * static_cast<double>(side - 1);
  const double scale = 1.0 + motion.dilation;
  std::vector<SyntheticPair> out;
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream s = root.derive({0xba1, i});
    std::vector<Blob> first, second;
    for (std::size_t k = 0; k < motion.blobs; ++k) {
      Blob b;
      b.cx = s.uniform(0.25 * side, 0.75 * side);
      b.cy = s.uniform(0.25 * side, 0.75 * side);
      b.sigma = s.uniform(motion.blob_sigma.first, motion.blob_sigma.second);
      b.amplitude = s.uniform(0.5, 1.0);
      first.push_back(b);
      second.push_back({c + scale * (b.cx - c) + motion.shift_x, c + scale * (b.cy - c) + motion.shift_y,
                        b.sigma * scale, b.amplitude});
    }
    SyntheticPair p;
    p.pair.age_at_first = s.uniform(motion.age_range.first, motion.age_range.second);
    p.pair.time_gap = motion.gap_range.first == motion.gap_range.second
                          ? motion.gap_range.first
                          : s.uniform(motion.gap_range.first, motion.gap_range.second);
    p.pair.first = render(first, side);
    p.pair.second = render(second, side);
    p.truth.u = Tensor::image(1, side, side);
    p.truth.v = Tensor::image(1, side, side);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        p.truth.u.at(0, y, x) = (motion.dilation * (static_cast<double>(x) - c) + motion.shift_x) / p.pair.time_gap;
        p.truth.v.at(0, y, x) = (motion.dilation * (static_cast<double>(y) - c) + motion.shift_y) / p.pair.time_gap;
      }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace siad

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "siad/anomaly.hpp"
#include "siad/opticalflow.hpp"

namespace siad {

struct SignalSpec {
  enum class Shape { Plateau, Ramp };

  std::vector<std::size_t> region;  // sorted pixel indices inside the ROI
  double amplitude = 0.0;
  Shape shape = Shape::Plateau;

  void validate(const RoiMask& roi) const;
  // s as a dense vector: amplitude on the region (plateau), or rising
  // linearly to amplitude along the region's sorted order (ramp).
  std::vector<double> signal(std::size_t pixels) const;
};

// Centered square block of `block` x `block` pixels.
std::vector<std::size_t> centered_block(std::size_t side, std::size_t block);

struct CohortSpec {
  std::size_t side = 16;
  std::size_t n_healthy_train = 200;
  std::size_t n_healthy_test = 50;
  std::size_t n_inference = 100;
  std::size_t n_variance = 50;
  std::size_t n_diseased = 100;
  std::uint64_t seed = 2024;
  double sigma2 = 1.0;
  SignalSpec signal{};
  std::pair<double, double> age_range{60.0, 85.0};
  std::pair<double, double> gap_range{1.0, 6.0};

  void validate() const;
  static CohortSpec desk();
  // 600 train / 100 test / 100 inference / 88 variance / 110 diseased at 80x80.
  static CohortSpec paper();
};

// Named, independent random streams for each cohort role.
enum class CohortRole : std::uint64_t { Train = 1, Test = 2, Inference = 3, Variance = 4, Diseased = 5, Null = 6 };
const char* role_name(CohortRole role);

// i.i.d. N(0, sigma2 I) images; image i uses stream (seed, stream, i).
std::vector<FlowImage> gen_null_cohort(std::size_t count, std::size_t side, double sigma2, std::uint64_t seed,
                                       std::uint64_t stream = 0);

struct DiseasedCohort {
  std::vector<FlowImage> images;
  std::vector<std::size_t> region;
};

// x = s + eps; the noise uses the same streams as gen_null_cohort.
DiseasedCohort gen_diseased(std::size_t count, std::size_t side, const SignalSpec& signal, double sigma2,
                            std::uint64_t seed, std::uint64_t stream = 0);

struct Conditions {
  double age = 0.0;
  double time_gap = 1.0;
};

std::vector<Conditions> gen_conditions(std::size_t count, std::pair<double, double> age_range,
                                       std::pair<double, double> gap_range, std::uint64_t seed,
                                       std::uint64_t stream = 0);

struct MotionSpec {
  double dilation = 0.0;  // second frame = first scaled by (1 + dilation) about the center
  double shift_x = 0.0;
  double shift_y = 0.0;
  std::size_t blobs = 4;
  std::pair<double, double> blob_sigma{1.5, 3.0};
  std::pair<double, double> age_range{60.0, 85.0};
  std::pair<double, double> gap_range{1.0, 1.0};
};

struct SyntheticPair {
  ImagePair pair;
  FlowField truth;  // displacement per unit time at first-frame pixels
};

// Sums of Gaussian blobs; the second frame is rendered analytically from the
// warped blob parameters.
std::vector<SyntheticPair> gen_image_pairs(std::size_t count, std::size_t side, const MotionSpec& motion,
                                           std::uint64_t seed);

}  // namespace siad

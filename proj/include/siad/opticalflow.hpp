#pragma once

#include <array>
#include <span>
#include <vector>

#include "siad/tensor.hpp"

namespace siad {

struct ImagePair {
  Tensor first;   // (1, H, W)
  Tensor second;  // (1, H, W)
  double time_gap = 1.0;  // years between scans
  double age_at_first = 0.0;

  void validate() const;
};

// Velocity per unit time (pixels / year).
struct FlowField {
  Tensor u;  // horizontal
  Tensor v;  // vertical
};

// Signed change rate; positive is local expansion.
struct ScalarFlowMap {
  Tensor values;  // (1, H, W)
};

struct HornSchunckParams {
  double smoothness = 0.5;
  std::size_t iterations = 200;
};

// Jacobi iteration of the Horn-Schunck equations: central-difference spatial
// gradients averaged over both frames, forward temporal difference, reflective
// borders. The result is divided by the pair's time gap.
FlowField horn_schunck(const ImagePair& pair, double smoothness, std::size_t iterations);
inline FlowField horn_schunck(const ImagePair& pair, const HornSchunckParams& p = {}) {
  return horn_schunck(pair, p.smoothness, p.iterations);
}

// du/dx + dv/dy; central differences inside, one-sided at the borders.
ScalarFlowMap divergence(const FlowField& flow);

// Sum of absolute forward differences of u and v.
double total_variation(const FlowField& flow);

struct CohortStandardization {
  std::vector<ScalarFlowMap> maps;
  double mean = 0.0;
  double std = 1.0;
};

// Pooled scalar mean / population std over every pixel of every map.
CohortStandardization standardize_cohort(std::span<const ScalarFlowMap> maps);
ScalarFlowMap apply_standardization(const ScalarFlowMap& map, double mean, double std);

struct ConditionStandardization {
  std::vector<std::array<double, 2>> values;  // (age, time_gap) per pair
  double age_mean = 0.0, age_std = 1.0;
  double gap_mean = 0.0, gap_std = 1.0;
};

ConditionStandardization standardize_conditions(std::span<const ImagePair> pairs);
ConditionStandardization standardize_conditions(std::span<const double> ages, std::span<const double> gaps);

}  // namespace siad

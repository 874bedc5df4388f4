#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "siad/anomaly.hpp"
#include "siad/cvae.hpp"
#include "siad/parametric.hpp"

namespace siad {

// Isotropic noise, Sigma = sigma2 * I.
struct NoiseModel {
  enum class Provenance { Known, Estimated };

  NoiseModel(double sigma2, Provenance provenance);
  double sigma2() const noexcept { return sigma2_; }
  double sigma() const;
  Provenance provenance() const noexcept { return provenance_; }

 private:
  double sigma2_;
  Provenance provenance_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Sorted disjoint union of z-intervals on which the detector reproduces the
// observed mask.
struct TruncationSet {
  std::vector<Interval> intervals;

  bool contains(double z) const;
  double measure() const;
};

struct TestSpec {
  std::vector<double> eta;
  double sigma_t = 0.0;
};

// +1/|A| on mask pixels, -1/|A^c| on the rest of the ROI, 0 outside.
// Empty when the mask or its complement within the ROI is empty.
std::optional<std::vector<double>> eta_from_mask(const AnomalyMask& mask, const RoiMask& roi);

double test_statistic(const FlowImage& x, std::span<const double> eta);

// Pooled per-pixel sample variance averaged over pixels.
NoiseModel estimate_noise(std::span<const FlowImage> heldout);

// Two-sided 2 * Phi-bar(|t| / sigma_T).
double naive_p(double t_obs, double sigma_t);

// min(1, 2^roi_size * p) evaluated in log space.
double bonferroni_p(double p_naive, std::size_t roi_size);

struct LineDecomposition {
  AffineLine line;
  double z_obs = 0.0;
  double sigma_t = 0.0;
};

inline constexpr double kDefaultWindowSigmas = 20.0;

// x = a + b z_obs with b = Sigma eta / (eta' Sigma eta); the window spans
// [-|z_obs| - k sigma_T, |z_obs| + k sigma_T].
LineDecomposition line_decomposition(const FlowImage& x, std::span<const double> eta, const NoiseModel& noise,
                                     double window_sigmas = kDefaultWindowSigmas);

struct TruncationStats {
  std::size_t pieces = 0;
};

TruncationSet truncation_region(const LineDecomposition& decomposition, std::span<const double> cond,
                                const ModelWeights& w, const Threshold& t, const RoiMask& roi,
                                const AnomalyMask& observed, const ParametricOptions& opts = {},
                                TruncationStats* stats = nullptr);

// P(|Z| >= |z_obs|, Z in trunc) / P(Z in trunc), Z ~ N(0, sigma_T^2).
double truncated_normal_p(double z_obs, double sigma_t, const TruncationSet& trunc);

struct TestOutcome {
  enum class Status { Tested, DegenerateSkip };

  Status status = Status::DegenerateSkip;
  AnomalyMask mask;
  double t_obs = 0.0;
  double sigma_t = 0.0;
  std::optional<double> p_naive;
  std::optional<double> p_bonferroni;
  std::optional<double> p_selective;
  std::optional<TruncationSet> truncation;
  std::size_t pieces = 0;
};

struct SelectiveOptions {
  double window_sigmas = kDefaultWindowSigmas;
  ParametricOptions parametric{};
};

TestOutcome selective_p(const FlowImage& x, std::span<const double> cond, const ModelWeights& w, const Threshold& t,
                        const RoiMask& roi, const NoiseModel& noise, const SelectiveOptions& opts = {});

// sup |F_n(p) - p| against U(0, 1).
double ks_statistic(std::span<const double> pvals);

}  // namespace siad

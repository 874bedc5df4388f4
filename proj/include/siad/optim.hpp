#pragma once

#include <cstdint>
#include <span>

#include "siad/cvae.hpp"

namespace siad {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update on a flat parameter array. `step` counts
// from 1 (the update being applied).
void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamConfig& cfg);

class AdamState {
 public:
  explicit AdamState(const ArchitectureSpec& arch) : m_(ModelWeights::zeros(arch)), v_(ModelWeights::zeros(arch)) {}

  void step(ModelWeights& w, const ModelWeights& grad, const AdamConfig& cfg);
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  ModelWeights m_;
  ModelWeights v_;
  std::uint64_t steps_ = 0;
};

}  // namespace siad

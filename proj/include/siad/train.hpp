#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "siad/cvae.hpp"
#include "siad/optim.hpp"

namespace siad {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  AdamConfig adam{};
  std::size_t patience = 20;
  double min_delta = 0.0;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
  double best_holdout = 0.0;
  bool early_stop = false;
};

struct TrainResult {
  ModelWeights weights;  // weights at the best held-out epoch
  std::vector<EpochRecord> curve;  // epoch 0 is the initialization
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

// Mean negative ELBO with the latent fixed at mu (no sampling).
double mean_loss(std::span<const Sample> data, const ModelWeights& w);

// Mini-batch Adam on the negative ELBO with early stopping on `holdout`
// (falls back to the training set when holdout is empty).
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> holdout, const ArchitectureSpec& arch,
                  const TrainConfig& cfg);

}  // namespace siad

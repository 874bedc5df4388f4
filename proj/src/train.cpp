#include "siad/train.hpp"

#include <numeric>

#include "siad/error.hpp"
#include "siad/random.hpp"

namespace siad {

double mean_loss(std::span<const Sample> data, const ModelWeights& w) {
  if (data.empty()) return 0.0;
  const std::vector<double> zero(w.arch.latent, 0.0);
  double total = 0.0;
  for (const Sample& s : data) total += elbo_objective(s, w, zero);
  return total / static_cast<double>(data.size());
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> holdout, const ArchitectureSpec& arch,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw InvalidInput("train: empty training set");
  if (cfg.batch_size == 0) throw InvalidInput("train: batch size must be positive");
  arch.validate();
  const std::span<const Sample> monitor = holdout.empty() ? train_set : holdout;

  const RandomStream root(cfg.seed);
  ModelWeights w = ModelWeights::initialize(arch, root.derive({0x1417}).key());
  AdamState adam(arch);

  TrainResult result;
  double best = mean_loss(monitor, w);
  result.weights = w;
  result.curve.push_back({0, mean_loss(train_set, w), best, best, false});

  std::vector<std::size_t> order(train_set.size());
  std::size_t waited = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream shuffle = root.derive({0x5407, epoch});
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[j < i ? j : i - 1]);
    }

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Sample> batch;
      std::vector<std::vector<double>> eps;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(train_set[order[k]]);
        RandomStream noise = root.derive({0xe95, epoch, order[k]});
        std::vector<double> e(arch.latent);
        for (double& v : e) v = noise.normal();
        eps.push_back(std::move(e));
      }
      BatchGradient bg = backward(batch, w, eps);
      adam.step(w, bg.grad, cfg.adam);
    }

    const double held = mean_loss(monitor, w);
    EpochRecord rec{epoch, mean_loss(train_set, w), held, best, false};
    if (held < best - cfg.min_delta) {
      best = held;
      result.weights = w;
      result.best_epoch = epoch;
      waited = 0;
    } else {
      ++waited;
    }
    rec.best_holdout = best;
    if (waited >= cfg.patience) {
      rec.early_stop = true;
      result.early_stopped = true;
      result.curve.push_back(rec);
      break;
    }
    result.curve.push_back(rec);
  }
  return result;
}

}  // namespace siad

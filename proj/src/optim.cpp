#include "siad/optim.hpp"

#include <cmath>

#include "siad/error.hpp"

namespace siad {

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
                 std::uint64_t step, const AdamConfig& cfg) {
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
    throw InvalidInput("adam: parameter, gradient and moment lengths differ");
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void AdamState::step(ModelWeights& w, const ModelWeights& grad, const AdamConfig& cfg) {
  ++steps_;
  auto ws = w.parameters();
  auto gs = grad.parameters();
  auto ms = m_.parameters();
  auto vs = v_.parameters();
  if (ws.size() != gs.size() || ws.size() != ms.size()) throw InvalidInput("adam: layer lists differ");
  for (std::size_t i = 0; i < ws.size(); ++i) adam_update(ws[i], gs[i], ms[i], vs[i], steps_, cfg);
}

}  // namespace siad

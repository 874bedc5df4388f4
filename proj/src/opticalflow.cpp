#include "siad/opticalflow.hpp"

#include <cmath>
#include <string>

#include "siad/error.hpp"

namespace siad {

void ImagePair::validate() const {
  if (first.rank() != 3 || first.channels() != 1) throw InvalidInput("image pair: expected (1,H,W) images");
  if (!first.same_shape(second)) throw InvalidInput("image pair: images have different shapes");
  if (!(time_gap > 0.0)) throw InvalidInput("image pair: time gap must be positive");
}

namespace {

struct Grid {
  long H, W;
  // Reflective (edge-inclusive) index.
  long ry(long y) const { return y < 0 ? -y - 1 : (y >= H ? 2 * H - y - 1 : y); }
  long rx(long x) const { return x < 0 ? -x - 1 : (x >= W ? 2 * W - x - 1 : x); }
  double at(const Tensor& t, long y, long x) const { return t[static_cast<std::size_t>(ry(y) * W + rx(x))]; }
};

void local_average(const Tensor& f, const Grid& g, Tensor& out) {
  for (long y = 0; y < g.H; ++y)
    for (long x = 0; x < g.W; ++x) {
      const double edges = g.at(f, y - 1, x) + g.at(f, y + 1, x) + g.at(f, y, x - 1) + g.at(f, y, x + 1);
      const double corners =
          g.at(f, y - 1, x - 1) + g.at(f, y - 1, x + 1) + g.at(f, y + 1, x - 1) + g.at(f, y + 1, x + 1);
      out[static_cast<std::size_t>(y * g.W + x)] = edges / 6.0 + corners / 12.0;
    }
}

std::pair<double, double> moments(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("standardize: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

FlowField horn_schunck(const ImagePair& pair, double smoothness, std::size_t iterations) {
  pair.validate();
  if (!(smoothness > 0.0)) throw InvalidInput("horn_schunck: smoothness must be positive");
  if (iterations < 1) throw InvalidInput("horn_schunck: need at least one iteration");
  const Grid g{static_cast<long>(pair.first.height()), static_cast<long>(pair.first.width())};
  const auto& shape = pair.first.shape();
  Tensor Ix(shape), Iy(shape), It(shape);
  for (long y = 0; y < g.H; ++y)
    for (long x = 0; x < g.W; ++x) {
      const auto i = static_cast<std::size_t>(y * g.W + x);
      const Tensor& a = pair.first;
      const Tensor& b = pair.second;
      Ix[i] = 0.25 * (g.at(a, y, x + 1) - g.at(a, y, x - 1) + g.at(b, y, x + 1) - g.at(b, y, x - 1));
      Iy[i] = 0.25 * (g.at(a, y + 1, x) - g.at(a, y - 1, x) + g.at(b, y + 1, x) - g.at(b, y - 1, x));
      It[i] = b[i] - a[i];
    }
  const double alpha2 = smoothness * smoothness;
  Tensor u(shape), v(shape), ubar(shape), vbar(shape);
  for (std::size_t it = 0; it < iterations; ++it) {
    local_average(u, g, ubar);
    local_average(v, g, vbar);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = (Ix[i] * ubar[i] + Iy[i] * vbar[i] + It[i]) / (alpha2 + Ix[i] * Ix[i] + Iy[i] * Iy[i]);
      u[i] = ubar[i] - Ix[i] * r;
      v[i] = vbar[i] - Iy[i] * r;
    }
  }
  const double inv_gap = 1.0 / pair.time_gap;
  for (double& x : u.values()) x *= inv_gap;
  for (double& x : v.values()) x *= inv_gap;
  return {std::move(u), std::move(v)};
}

ScalarFlowMap divergence(const FlowField& flow) {
  if (!flow.u.same_shape(flow.v) || flow.u.rank() != 3) throw InvalidInput("divergence: u and v shapes differ");
  const std::size_t H = flow.u.height(), W = flow.u.width();
  if (H < 2 || W < 2) throw InvalidInput("divergence: field must be at least 2x2");
  Tensor out(flow.u.shape());
  auto ddx = [&](std::size_t y, std::size_t x) {
    const Tensor& u = flow.u;
    if (x == 0) return u.at(0, y, 1) - u.at(0, y, 0);
    if (x == W - 1) return u.at(0, y, W - 1) - u.at(0, y, W - 2);
    return 0.5 * (u.at(0, y, x + 1) - u.at(0, y, x - 1));
  };
  auto ddy = [&](std::size_t y, std::size_t x) {
    const Tensor& v = flow.v;
    if (y == 0) return v.at(0, 1, x) - v.at(0, 0, x);
    if (y == H - 1) return v.at(0, H - 1, x) - v.at(0, H - 2, x);
    return 0.5 * (v.at(0, y + 1, x) - v.at(0, y - 1, x));
  };
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) out.at(0, y, x) = ddx(y, x) + ddy(y, x);
  return {std::move(out)};
}

double total_variation(const FlowField& flow) {
  const std::size_t H = flow.u.height(), W = flow.u.width();
  double tv = 0.0;
  for (const Tensor* f : {&flow.u, &flow.v})
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        if (x + 1 < W) tv += std::abs(f->at(0, y, x + 1) - f->at(0, y, x));
        if (y + 1 < H) tv += std::abs(f->at(0, y + 1, x) - f->at(0, y, x));
      }
  return tv;
}

CohortStandardization standardize_cohort(std::span<const ScalarFlowMap> maps) {
  if (maps.size() < 2) throw InvalidInput("standardize_cohort: need at least two maps");
  std::vector<double> pooled;
  for (const auto& m : maps) pooled.insert(pooled.end(), m.values.data().begin(), m.values.data().end());
  const auto [mean, std] = moments(pooled);
  if (!(std > 0.0)) throw InvalidInput("standardize_cohort: zero variance across the cohort");
  CohortStandardization out{{}, mean, std};
  for (const auto& m : maps) out.maps.push_back(apply_standardization(m, mean, std));
  return out;
}

ScalarFlowMap apply_standardization(const ScalarFlowMap& map, double mean, double std) {
  ScalarFlowMap out = map;
  for (double& v : out.values.values()) v = (v - mean) / std;
  return out;
}

ConditionStandardization standardize_conditions(std::span<const double> ages, std::span<const double> gaps) {
  if (ages.size() != gaps.size()) throw InvalidInput("standardize_conditions: length mismatch");
  if (ages.size() < 2) throw InvalidInput("standardize_conditions: need at least two subjects");
  const auto [am, as] = moments(ages);
  const auto [gm, gs] = moments(gaps);
  if (!(as > 0.0)) throw InvalidInput("standardize_conditions: ages have zero variance");
  if (!(gs > 0.0)) throw InvalidInput("standardize_conditions: time gaps have zero variance");
  ConditionStandardization out{{}, am, as, gm, gs};
  for (std::size_t i = 0; i < ages.size(); ++i) out.values.push_back({(ages[i] - am) / as, (gaps[i] - gm) / gs});
  return out;
}

ConditionStandardization standardize_conditions(std::span<const ImagePair> pairs) {
  std::vector<double> ages, gaps;
  for (const auto& p : pairs) {
    ages.push_back(p.age_at_first);
    gaps.push_back(p.time_gap);
  }
  return standardize_conditions(ages, gaps);
}

}  // namespace siad

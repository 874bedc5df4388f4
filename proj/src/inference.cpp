#include "siad/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "siad/error.hpp"
#include "siad/normal_tail.hpp"

namespace siad {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NoiseModel::NoiseModel(double sigma2, Provenance provenance) : sigma2_(sigma2), provenance_(provenance) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("noise variance must be positive and finite");
}

double NoiseModel::sigma() const { return std::sqrt(sigma2_); }

bool TruncationSet::contains(double z) const {
  return std::any_of(intervals.begin(), intervals.end(), [z](const Interval& iv) { return iv.lo <= z && z <= iv.hi; });
}

double TruncationSet::measure() const {
  double m = 0.0;
  for (const auto& iv : intervals) m += iv.hi - iv.lo;
  return m;
}

std::optional<std::vector<double>> eta_from_mask(const AnomalyMask& mask, const RoiMask& roi) {
  std::size_t inside = 0;
  for (std::size_t i : mask.pixels) {
    if (!roi.contains(i)) throw InvalidInput("eta_from_mask: mask pixel outside the ROI");
    ++inside;
  }
  const std::size_t rest = roi.count() - inside;
  if (inside == 0 || rest == 0) return std::nullopt;
  std::vector<double> eta(roi.pixels(), 0.0);
  const double neg = -1.0 / static_cast<double>(rest);
  for (std::size_t i : roi.indices()) eta[i] = neg;
  const double pos = 1.0 / static_cast<double>(inside);
  for (std::size_t i : mask.pixels) eta[i] = pos;
  return eta;
}

double test_statistic(const FlowImage& x, std::span<const double> eta) {
  if (x.size() != eta.size()) throw InvalidInput("test_statistic: length mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) t += eta[i] * x[i];
  return t;
}

NoiseModel estimate_noise(std::span<const FlowImage> heldout) {
  if (heldout.size() < 2) throw InvalidInput("estimate_noise: need at least two images");
  const std::size_t n = heldout.front().size();
  for (const auto& img : heldout)
    if (img.size() != n) throw InvalidInput("estimate_noise: images differ in size");
  const auto count = static_cast<double>(heldout.size());
  double pooled = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (const auto& img : heldout) mean += img[j];
    mean /= count;
    double ss = 0.0;
    for (const auto& img : heldout) ss += (img[j] - mean) * (img[j] - mean);
    pooled += ss / (count - 1.0);
  }
  return NoiseModel(pooled / static_cast<double>(n), NoiseModel::Provenance::Estimated);
}

double naive_p(double t_obs, double sigma_t) {
  if (!(sigma_t > 0.0)) throw InvalidInput("naive_p: sigma_T must be positive");
  return std::min(1.0, std::erfc(std::abs(t_obs) / (sigma_t * std::numbers::sqrt2)));
}

double bonferroni_p(double p_naive, std::size_t roi_size) {
  if (roi_size < 1) throw InvalidInput("bonferroni_p: ROI size must be at least 1");
  if (p_naive <= 0.0) return 0.0;
  return std::exp(std::min(0.0, std::log(p_naive) + static_cast<double>(roi_size) * std::numbers::ln2));
}

LineDecomposition line_decomposition(const FlowImage& x, std::span<const double> eta, const NoiseModel& noise,
                                     double window_sigmas) {
  if (x.size() != eta.size()) throw InvalidInput("line_decomposition: length mismatch");
  double eta_sq = 0.0;
  for (double e : eta) eta_sq += e * e;
  if (!(eta_sq > 0.0)) throw InvalidInput("line_decomposition: degenerate eta");
  LineDecomposition d;
  d.sigma_t = std::sqrt(noise.sigma2() * eta_sq);
  d.z_obs = test_statistic(x, eta);
  // With Sigma = sigma2 I the direction Sigma eta / (eta' Sigma eta) is eta / |eta|^2.
  d.line.b.resize(eta.size());
  d.line.a.resize(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    d.line.b[i] = eta[i] / eta_sq;
    d.line.a[i] = x[i] - d.line.b[i] * d.z_obs;
  }
  const double reach = std::abs(d.z_obs) + window_sigmas * d.sigma_t;
  d.line.z_lo = -reach;
  d.line.z_hi = reach;
  return d;
}

TruncationSet truncation_region(const LineDecomposition& dec, std::span<const double> cond, const ModelWeights& w,
                                const Threshold& t, const RoiMask& roi, const AnomalyMask& observed,
                                const ParametricOptions& opts, TruncationStats* stats) {
  const AffineLine& line = dec.line;
  const std::vector<std::size_t>& members = roi.indices();
  std::vector<std::uint8_t> in_observed(roi.pixels(), 0);
  for (std::size_t i : observed.pixels) in_observed.at(i) = 1;

  TruncationSet set;
  std::vector<double> c0(members.size()), c1(members.size()), cuts;
  std::size_t pieces = 0;
  ParametricOptions restricted = opts;
  if (restricted.outputs.empty()) restricted.outputs = members;

  auto keep = [&](double lo, double hi) {
    if (!set.intervals.empty() && set.intervals.back().hi == lo) {
      set.intervals.back().hi = hi;
    } else {
      set.intervals.push_back({lo, hi});
    }
  };

  for_each_piece(
      line, cond, w,
      [&](const PiecewisePiece& piece) {
        ++pieces;
        cuts.clear();
        cuts.push_back(piece.lo);
        for (std::size_t k = 0; k < members.size(); ++k) {
          const std::size_t i = members[k];
          c0[k] = line.a[i] - piece.recon_offset[i];
          c1[k] = line.b[i] - piece.recon_slope[i];
          if (c1[k] == 0.0) continue;
          for (double level : {t.value, -t.value}) {
            const double z = (level - c0[k]) / c1[k];
            if (z > piece.lo && z < piece.hi) cuts.push_back(z);
          }
        }
        cuts.push_back(piece.hi);
        std::sort(cuts.begin() + 1, cuts.end() - 1);
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
          const double lo = cuts[s], hi = cuts[s + 1];
          if (!(hi > lo)) continue;
          const double mid = 0.5 * (lo + hi);
          bool same = true;
          for (std::size_t k = 0; k < members.size() && same; ++k) {
            const bool flagged = std::abs(c0[k] + c1[k] * mid) > t.value;
            same = flagged == (in_observed[members[k]] != 0);
          }
          if (same) keep(lo, hi);
        }
      },
      restricted);

  if (stats) stats->pieces = pieces;
  if (!set.contains(dec.z_obs)) {
    throw NumericalError("truncation region does not contain the observed statistic (z_obs = " +
                         std::to_string(dec.z_obs) + ")");
  }
  return set;
}

double truncated_normal_p(double z_obs, double sigma_t, const TruncationSet& trunc) {
  if (!(sigma_t > 0.0)) throw InvalidInput("truncated_normal_p: sigma_T must be positive");
  const double cut = std::abs(z_obs) / sigma_t;
  std::vector<double> num, den;
  for (const Interval& iv : trunc.intervals) {
    const double lo = iv.lo / sigma_t, hi = iv.hi / sigma_t;
    den.push_back(stats::log_interval_mass(lo, hi));
    if (lo < -cut) num.push_back(stats::log_interval_mass(lo, std::min(hi, -cut)));
    if (hi > cut) num.push_back(stats::log_interval_mass(std::max(lo, cut), hi));
  }
  const double log_den = stats::log_sum_exp(den);
  if (log_den == -kInf) throw NumericalError("truncation set has zero probability mass");
  const double log_num = stats::log_sum_exp(num);
  if (log_num == -kInf) return 0.0;
  return std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
}

TestOutcome selective_p(const FlowImage& x, std::span<const double> cond, const ModelWeights& w, const Threshold& t,
                        const RoiMask& roi, const NoiseModel& noise, const SelectiveOptions& opts) {
  TestOutcome out;
  out.mask = detect(x, cond, w, t, roi);
  const auto eta = eta_from_mask(out.mask, roi);
  if (!eta) {
    out.status = TestOutcome::Status::DegenerateSkip;
    return out;
  }
  const LineDecomposition dec = line_decomposition(x, *eta, noise, opts.window_sigmas);
  out.status = TestOutcome::Status::Tested;
  out.t_obs = dec.z_obs;
  out.sigma_t = dec.sigma_t;
  out.p_naive = naive_p(dec.z_obs, dec.sigma_t);
  out.p_bonferroni = bonferroni_p(*out.p_naive, roi.count());
  TruncationStats stats;
  out.truncation = truncation_region(dec, cond, w, t, roi, out.mask, opts.parametric, &stats);
  out.pieces = stats.pieces;
  out.p_selective = truncated_normal_p(dec.z_obs, dec.sigma_t, *out.truncation);
  return out;
}

double ks_statistic(std::span<const double> pvals) {
  if (pvals.empty()) throw InvalidInput("ks_statistic: no p-values");
  std::vector<double> sorted(pvals.begin(), pvals.end());
  for (double p : sorted)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("ks_statistic: p-values must lie in [0, 1]");
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - sorted[i];
    const double below = sorted[i] - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

}  // namespace siad

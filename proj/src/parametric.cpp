#include "siad/parametric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "siad/error.hpp"
#include "siad/layers.hpp"

namespace siad {

void AffineLine::validate(std::size_t pixels) const {
  if (a.size() != pixels || b.size() != pixels) {
    throw InvalidInput("affine line length does not match the image pixel count");
  }
  if (!(z_lo < z_hi) || !std::isfinite(z_lo) || !std::isfinite(z_hi)) {
    throw InvalidInput("affine line window must be a finite interval with z_lo < z_hi");
  }
  double norm = 0.0;
  for (double v : b) norm += v * v;
  if (!(norm > 0.0)) throw InvalidInput("affine line direction is zero");
}

std::vector<double> AffineLine::at(double z) const {
  std::vector<double> x(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + b[i] * z;
  return x;
}

namespace parametric {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double band(double alpha, double beta, double z) {
  return 1e-12 * (1.0 + std::abs(alpha) + std::abs(beta * z));
}

}  // namespace

double relu_right_limit(std::span<double> offset, std::span<double> slope, double z) {
  const double floor = z + step_tolerance(z);
  double next = kInf;
  for (std::size_t i = 0; i < offset.size(); ++i) {
    const double alpha = offset[i], beta = slope[i];
    const double v = alpha + beta * z;
    const double tol = band(alpha, beta, z);
    const bool active = v > tol || (std::abs(v) <= tol && beta > 0.0);
    if (active) {
      if (beta < 0.0) {
        const double c = -alpha / beta;
        if (c > floor && c < next) next = c;
      }
    } else {
      offset[i] = 0.0;
      slope[i] = 0.0;
      if (beta > 0.0) {
        const double c = -alpha / beta;
        if (c > floor && c < next) next = c;
      }
    }
  }
  return next;
}

double maxpool_right_limit(const AffineMap& in, AffineMap& out, double z) {
  const std::size_t C = in.channels, H = in.height, W = in.width;
  if (H % 2 != 0 || W % 2 != 0) throw InvalidInput("maxpool2: spatial extents must be even");
  if (out.channels != C || out.height != H / 2 || out.width != W / 2) out = AffineMap(C, H / 2, W / 2);
  const double floor = z + step_tolerance(z);
  double next = kInf;
  std::size_t slot = 0;
  std::size_t cand[4];
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < H / 2; ++y) {
      for (std::size_t x = 0; x < W / 2; ++x, ++slot) {
        const std::size_t base = (c * H + 2 * y) * W + 2 * x;
        cand[0] = base;
        cand[1] = base + 1;
        cand[2] = base + W;
        cand[3] = base + W + 1;
        std::size_t best = cand[0];
        double best_v = in.value(best, z);
        for (int k = 1; k < 4; ++k) {
          const std::size_t j = cand[k];
          const double v = in.value(j, z);
          const double tol = 1e-12 * (1.0 + std::abs(v) + std::abs(best_v));
          if (v > best_v + tol || (std::abs(v - best_v) <= tol && in.slope[j] > in.slope[best])) {
            best = j;
            best_v = v;
          }
        }
        out.offset[slot] = in.offset[best];
        out.slope[slot] = in.slope[best];
        for (int k = 0; k < 4; ++k) {
          const std::size_t j = cand[k];
          if (j == best || !(in.slope[j] > in.slope[best])) continue;
          const double cz = (in.offset[best] - in.offset[j]) / (in.slope[j] - in.slope[best]);
          if (cz > floor && cz < next) next = cz;
        }
      }
    }
  }
  return next;
}

}  // namespace parametric

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void shape_like(AffineMap& m, std::size_t c, std::size_t h, std::size_t w) {
  if (m.channels != c || m.height != h || m.width != w) m = AffineMap(c, h, w);
}

void affine_conv(const AffineMap& in, const ConvLayer& layer, const Box& box, AffineMap& out) {
  shape_like(out, layer.kernel.extent(0), in.height, in.width);
  conv2d_affine(in.offset.data(), in.slope.data(), in.channels, in.height, in.width, layer.kernel, layer.bias,
                box, out.offset.data(), out.slope.data());
}

Box full_box(std::size_t side) { return {0, side, 0, side}; }

Box dilate(const Box& b, std::size_t r, std::size_t side) {
  return {b.y0 > r ? b.y0 - r : 0, std::min(side, b.y1 + r), b.x0 > r ? b.x0 - r : 0, std::min(side, b.x1 + r)};
}

Box halve(const Box& b) { return {b.y0 / 2, (b.y1 + 1) / 2, b.x0 / 2, (b.x1 + 1) / 2}; }

void affine_dense(const DenseLayer& layer, std::span<const double> off, std::span<const double> slope,
                  std::vector<double>& out_off, std::vector<double>& out_slope) {
  const std::size_t outs = layer.weight.extent(0), ins = layer.weight.extent(1);
  out_off.assign(outs, 0.0);
  out_slope.assign(outs, 0.0);
  for (std::size_t o = 0; o < outs; ++o) {
    const double* row = layer.weight.raw() + o * ins;
    double a = layer.bias[o], b = 0.0;
    for (std::size_t i = 0; i < ins; ++i) {
      a += row[i] * off[i];
      b += row[i] * slope[i];
    }
    out_off[o] = a;
    out_slope[o] = b;
  }
}

void upsample_concat(const AffineMap& low, const AffineMap& skip, AffineMap& out) {
  const std::size_t H = skip.height, W = skip.width;
  shape_like(out, low.channels + skip.channels, H, W);
  for (std::size_t c = 0; c < low.channels; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t src = (c * low.height + y / 2) * low.width + x / 2;
        const std::size_t dst = (c * H + y) * W + x;
        out.offset[dst] = low.offset[src];
        out.slope[dst] = low.slope[src];
      }
  const std::size_t shift = low.channels * H * W;
  std::copy(skip.offset.begin(), skip.offset.end(), out.offset.begin() + static_cast<std::ptrdiff_t>(shift));
  std::copy(skip.slope.begin(), skip.slope.end(), out.slope.begin() + static_cast<std::ptrdiff_t>(shift));
}

// Stage-cached affine forward pass. Stage pre-activations depend only on
// upstream activation patterns, so a pattern change at stage s leaves every
// stage before s (and stage s's own pre-activation) intact.
class ParametricForward {
 public:
  enum class Kind { EncoderConv, EncoderPool, Grid, Decoder, Output };
  struct Stage {
    Kind kind;
    std::size_t index;  // block index for conv stages
    AffineMap pre;
    AffineMap out;
    double crossing = kInf;
    Box box{};
    AffineMap joined;
  };

  ParametricForward(const AffineLine& line, std::span<const double> cond, const ModelWeights& w,
                    std::span<const std::size_t> outputs)
      : w_(w), cond_(cond.begin(), cond.end()) {
    const ArchitectureSpec& a = w.arch;
    input_ = AffineMap(1 + a.conditions, a.side, a.side);
    const std::size_t n = a.pixels();
    std::copy(line.a.begin(), line.a.end(), input_.offset.begin());
    std::copy(line.b.begin(), line.b.end(), input_.slope.begin());
    for (std::size_t c = 0; c < a.conditions; ++c)
      std::fill(input_.offset.begin() + static_cast<std::ptrdiff_t>((c + 1) * n),
                input_.offset.begin() + static_cast<std::ptrdiff_t>((c + 2) * n), cond[c]);
    for (std::size_t b = 0; b < a.blocks(); ++b) {
      stages_.push_back(make_stage(Kind::EncoderConv, b));
      stages_.push_back(make_stage(Kind::EncoderPool, b));
    }
    stages_.push_back(make_stage(Kind::Grid, 0));
    for (std::size_t j = 0; j < a.blocks(); ++j) stages_.push_back(make_stage(Kind::Decoder, j));
    stages_.push_back(make_stage(Kind::Output, 0));
    assign_boxes(outputs);
  }

  // Recomputes stages from `restart` on at z; stage `restart` keeps its
  // pre-activation unless `full` is set.
  void evaluate(std::size_t restart, double z, bool full) {
    for (std::size_t s = restart; s < stages_.size(); ++s) {
      if (full || s > restart) compute_pre(s);
      apply(s, z);
    }
  }

  double next_breakpoint() const {
    double next = kInf;
    for (const Stage& s : stages_) next = std::min(next, s.crossing);
    return next;
  }

  std::size_t first_stage_at(double z) const {
    const double limit = z + parametric::step_tolerance(z);
    for (std::size_t s = 0; s < stages_.size(); ++s)
      if (stages_[s].crossing <= limit) return s;
    return stages_.size();
  }

  const AffineMap& output() const { return stages_.back().out; }
  std::size_t stage_count() const { return stages_.size(); }

 private:
  // Encoder and grid stages are dense; decoder and output stages only need
  // the receptive field of the requested pixels.
  void assign_boxes(std::span<const std::size_t> outputs) {
    const ArchitectureSpec& a = w_.arch;
    Box need = full_box(a.side);
    if (!outputs.empty()) {
      need = {a.side, 0, a.side, 0};
      for (std::size_t p : outputs) {
        if (p >= a.pixels()) throw InvalidInput("parametric output index out of range");
        const std::size_t y = p / a.side, x = p % a.side;
        need = {std::min(need.y0, y), std::max(need.y1, y + 1), std::min(need.x0, x), std::max(need.x1, x + 1)};
      }
    }
    const std::size_t r = a.kernel / 2;
    const std::size_t B = a.blocks();
    std::size_t s = stages_.size() - 1;
    stages_[s].box = need;
    need = dilate(need, r, a.side);
    for (std::size_t j = B; j-- > 0;) {
      const std::size_t res = a.side >> (B - 1 - j);
      stages_[--s].box = need;
      need = halve(dilate(need, r, res));
    }
    for (std::size_t t = 0; t < s; ++t) {
      const std::size_t res = a.side >> (stages_[t].kind == Kind::EncoderConv ? stages_[t].index : 0);
      stages_[t].box = full_box(res);
    }
  }

  static Stage make_stage(Kind kind, std::size_t index) {
    Stage st;
    st.kind = kind;
    st.index = index;
    return st;
  }

  // Encoder skip b lives at stage 2b.
  const AffineMap& skip(std::size_t b) const { return stages_[2 * b].out; }

  void compute_pre(std::size_t s) {
    Stage& st = stages_[s];
    const ArchitectureSpec& a = w_.arch;
    switch (st.kind) {
      case Kind::EncoderConv: {
        const AffineMap& in = st.index == 0 ? input_ : stages_[s - 1].out;
        affine_conv(in, w_.encoder[st.index], st.box, st.pre);
        break;
      }
      case Kind::EncoderPool:
        break;
      case Kind::Grid: {
        const AffineMap& pooled = stages_[s - 1].out;
        std::vector<double> mu_off, mu_slope;
        affine_dense(w_.mu, pooled.offset, pooled.slope, mu_off, mu_slope);
        mu_off.insert(mu_off.end(), cond_.begin(), cond_.end());
        mu_slope.insert(mu_slope.end(), cond_.size(), 0.0);
        shape_like(st.pre, a.channels.back(), a.bottleneck_side(), a.bottleneck_side());
        affine_dense(w_.latent_to_grid, mu_off, mu_slope, st.pre.offset, st.pre.slope);
        break;
      }
      case Kind::Decoder: {
        upsample_concat(stages_[s - 1].out, skip(a.blocks() - 1 - st.index), st.joined);
        affine_conv(st.joined, w_.decoder[st.index], st.box, st.pre);
        break;
      }
      case Kind::Output:
        affine_conv(stages_[s - 1].out, w_.output, st.box, st.pre);
        break;
    }
  }

  void apply(std::size_t s, double z) {
    Stage& st = stages_[s];
    switch (st.kind) {
      case Kind::EncoderPool:
        st.crossing = parametric::maxpool_right_limit(stages_[s - 1].out, st.out, z);
        break;
      case Kind::Output:
        st.out = st.pre;
        st.crossing = kInf;
        break;
      default:
        st.out = st.pre;
        st.crossing = parametric::relu_right_limit(st.out.offset, st.out.slope, z);
        break;
    }
  }

  const ModelWeights& w_;
  std::vector<double> cond_;
  AffineMap input_;
  std::vector<Stage> stages_;
};

}  // namespace

void for_each_piece(const AffineLine& line, std::span<const double> cond, const ModelWeights& w,
                    const std::function<void(const PiecewisePiece&)>& visit, const ParametricOptions& opts) {
  line.validate(w.arch.pixels());
  if (cond.size() != w.arch.conditions) throw InvalidInput("condition vector length mismatch");
  ParametricForward fwd(line, cond, w, opts.outputs);

  double z = line.z_lo;
  std::size_t restart = 0;
  bool full = true;
  std::size_t count = 0;
  PiecewisePiece piece;
  while (true) {
    fwd.evaluate(restart, z, full);
    full = false;
    const double end = std::min(fwd.next_breakpoint(), line.z_hi);
    piece.lo = z;
    piece.hi = end;
    piece.recon_offset = fwd.output().offset;
    piece.recon_slope = fwd.output().slope;
    visit(piece);
    if (++count > opts.max_pieces) {
      throw NumericalError("parametric search exceeded the piece-count cap of " + std::to_string(opts.max_pieces));
    }
    if (end >= line.z_hi) break;
    restart = fwd.first_stage_at(end);
    if (restart >= fwd.stage_count()) throw NumericalError("parametric search lost track of its breakpoint");
    z = end;
  }
}

std::vector<PiecewisePiece> parametric_infer(const AffineLine& line, std::span<const double> cond,
                                             const ModelWeights& w, const ParametricOptions& opts) {
  std::vector<PiecewisePiece> pieces;
  for_each_piece(line, cond, w, [&](const PiecewisePiece& p) { pieces.push_back(p); }, opts);
  return pieces;
}

}  // namespace siad

#include "siad/cvae.hpp"

#include <cmath>
#include <string>

#include "siad/error.hpp"
#include "siad/layers.hpp"
#include "siad/random.hpp"

namespace siad {

void ArchitectureSpec::validate() const {
  if (channels.empty()) throw InvalidInput("architecture needs at least one block");
  if (side == 0 || side % (1u << blocks()) != 0) {
    throw InvalidInput("image side " + std::to_string(side) + " is not divisible by 2^" + std::to_string(blocks()));
  }
  if (latent < 1) throw InvalidInput("latent dimension must be at least 1");
  if (kernel % 2 == 0) throw InvalidInput("kernel side must be odd");
  for (auto c : channels)
    if (c == 0) throw InvalidInput("channel width must be positive");
}

namespace {

// Decoder block j (deepest first) maps 2*C_k -> C_{k-1} with k = B - j, C_0 = C_1.
std::size_t decoder_in(const ArchitectureSpec& a, std::size_t j) { return 2 * a.channels[a.blocks() - 1 - j]; }
std::size_t decoder_out(const ArchitectureSpec& a, std::size_t j) {
  const std::size_t k = a.blocks() - j;
  return k >= 2 ? a.channels[k - 2] : a.channels[0];
}

ConvLayer conv_layer(std::size_t outs, std::size_t ins, std::size_t k) {
  return {Tensor({outs, ins, k, k}), std::vector<double>(outs, 0.0)};
}

DenseLayer dense_layer(std::size_t outs, std::size_t ins) { return {Tensor({outs, ins}), std::vector<double>(outs, 0.0)}; }

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, RandomStream stream) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = stream.uniform(-limit, limit);
}

void check_tensor(const Tensor& t, const std::vector<std::size_t>& shape, const char* name) {
  if (t.shape() != shape) throw InvalidInput(std::string("weights: layer ") + name + " has the wrong shape");
  if (!t.all_finite()) throw InvalidInput(std::string("weights: layer ") + name + " has non-finite entries");
}

void check_bias(const std::vector<double>& b, std::size_t n, const char* name) {
  if (b.size() != n) throw InvalidInput(std::string("weights: bias ") + name + " has the wrong length");
  for (double v : b)
    if (!std::isfinite(v)) throw InvalidInput(std::string("weights: bias ") + name + " has non-finite entries");
}

void dense_backward(const DenseLayer& layer, std::span<const double> input, std::span<const double> grad_out,
                    DenseLayer& grad, std::vector<double>* grad_input) {
  const std::size_t outs = layer.weight.extent(0), ins = layer.weight.extent(1);
  if (grad_input) grad_input->assign(ins, 0.0);
  for (std::size_t o = 0; o < outs; ++o) {
    const double g = grad_out[o];
    grad.bias[o] += g;
    if (g == 0.0) continue;
    double* gw = grad.weight.raw() + o * ins;
    const double* w = layer.weight.raw() + o * ins;
    for (std::size_t i = 0; i < ins; ++i) {
      gw[i] += g * input[i];
      if (grad_input) (*grad_input)[i] += g * w[i];
    }
  }
}

void add_conv_grads(ConvLayer& dst, const ConvGradients& g) {
  for (std::size_t i = 0; i < dst.kernel.size(); ++i) dst.kernel[i] += g.kernel[i];
  for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += g.bias[i];
}

void relu_mask(Tensor& grad, const Tensor& preact) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(preact[i] > 0.0)) grad[i] = 0.0;
}

}  // namespace

ModelWeights ModelWeights::zeros(const ArchitectureSpec& arch) {
  arch.validate();
  ModelWeights w;
  w.arch = arch;
  const std::size_t k = arch.kernel;
  std::size_t in = 1 + arch.conditions;
  for (auto c : arch.channels) {
    w.encoder.push_back(conv_layer(c, in, k));
    in = c;
  }
  w.mu = dense_layer(arch.latent, arch.bottleneck_size());
  w.logvar = dense_layer(arch.latent, arch.bottleneck_size());
  w.latent_to_grid = dense_layer(arch.bottleneck_size(), arch.latent + arch.conditions);
  for (std::size_t j = 0; j < arch.blocks(); ++j) w.decoder.push_back(conv_layer(decoder_out(arch, j), decoder_in(arch, j), k));
  w.output = conv_layer(1, arch.channels[0], k);
  return w;
}

ModelWeights ModelWeights::initialize(const ArchitectureSpec& arch, std::uint64_t seed) {
  ModelWeights w = zeros(arch);
  const RandomStream root(seed);
  std::uint64_t layer = 0;
  auto init_conv = [&](ConvLayer& l) {
    const std::size_t kk = l.kernel.extent(2) * l.kernel.extent(3);
    glorot(l.kernel, l.kernel.extent(1) * kk, l.kernel.extent(0) * kk, root.derive({0x1a7e5, layer++}));
  };
  auto init_dense = [&](DenseLayer& l) {
    glorot(l.weight, l.weight.extent(1), l.weight.extent(0), root.derive({0x1a7e5, layer++}));
  };
  for (auto& l : w.encoder) init_conv(l);
  init_dense(w.mu);
  init_dense(w.logvar);
  init_dense(w.latent_to_grid);
  for (auto& l : w.decoder) init_conv(l);
  init_conv(w.output);
  return w;
}

std::vector<std::span<double>> ModelWeights::parameters() {
  std::vector<std::span<double>> out;
  auto conv = [&](ConvLayer& l) {
    out.emplace_back(l.kernel.values());
    out.emplace_back(l.bias);
  };
  auto full = [&](DenseLayer& l) {
    out.emplace_back(l.weight.values());
    out.emplace_back(l.bias);
  };
  for (auto& l : encoder) conv(l);
  full(mu);
  full(logvar);
  full(latent_to_grid);
  for (auto& l : decoder) conv(l);
  conv(output);
  return out;
}

std::vector<std::span<const double>> ModelWeights::parameters() const {
  auto spans = const_cast<ModelWeights*>(this)->parameters();
  return {spans.begin(), spans.end()};
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for (auto s : parameters()) n += s.size();
  return n;
}

void ModelWeights::validate() const {
  arch.validate();
  const ModelWeights ref = zeros(arch);
  if (encoder.size() != ref.encoder.size() || decoder.size() != ref.decoder.size()) {
    throw InvalidInput("weights: block count does not match architecture");
  }
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    check_tensor(encoder[i].kernel, ref.encoder[i].kernel.shape(), "encoder");
    check_bias(encoder[i].bias, ref.encoder[i].bias.size(), "encoder");
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    check_tensor(decoder[i].kernel, ref.decoder[i].kernel.shape(), "decoder");
    check_bias(decoder[i].bias, ref.decoder[i].bias.size(), "decoder");
  }
  check_tensor(mu.weight, ref.mu.weight.shape(), "mu");
  check_bias(mu.bias, ref.mu.bias.size(), "mu");
  check_tensor(logvar.weight, ref.logvar.weight.shape(), "logvar");
  check_bias(logvar.bias, ref.logvar.bias.size(), "logvar");
  check_tensor(latent_to_grid.weight, ref.latent_to_grid.weight.shape(), "latent_to_grid");
  check_bias(latent_to_grid.bias, ref.latent_to_grid.bias.size(), "latent_to_grid");
  check_tensor(output.kernel, ref.output.kernel.shape(), "output");
  check_bias(output.bias, 1, "output");
}

Tensor encoder_input(const Tensor& x, std::span<const double> cond, const ArchitectureSpec& arch) {
  if (x.size() != arch.pixels()) {
    throw InvalidInput("image has " + std::to_string(x.size()) + " pixels, architecture expects " +
                       std::to_string(arch.pixels()));
  }
  if (cond.size() != arch.conditions) throw InvalidInput("condition vector length mismatch");
  const std::size_t n = arch.pixels();
  Tensor in = Tensor::image(1 + cond.size(), arch.side, arch.side);
  std::copy(x.raw(), x.raw() + n, in.raw());
  for (std::size_t c = 0; c < cond.size(); ++c) std::fill(in.raw() + (c + 1) * n, in.raw() + (c + 2) * n, cond[c]);
  return in;
}

EncoderOutput encoder_forward(const Tensor& x, std::span<const double> cond, const ModelWeights& w) {
  EncoderOutput out;
  Tensor h = encoder_input(x, cond, w.arch);
  for (const auto& layer : w.encoder) {
    out.block_inputs.push_back(h);
    Tensor pre = conv2d(h, layer.kernel, layer.bias);
    Tensor act = relu(pre);
    PoolResult pooled = maxpool2(act);
    out.preacts.push_back(std::move(pre));
    out.skips.push_back(std::move(act));
    out.argmax.push_back(std::move(pooled.argmax));
    h = std::move(pooled.output);
  }
  out.bottleneck = h.data();
  out.stats.mu = dense(w.mu.weight, w.mu.bias, out.bottleneck);
  out.stats.logvar = dense(w.logvar.weight, w.logvar.bias, out.bottleneck);
  return out;
}

Tensor decoder_forward(std::span<const double> zlat, std::span<const double> cond, const std::vector<Tensor>& skips,
                       const ModelWeights& w, DecoderTrace* trace) {
  const ArchitectureSpec& a = w.arch;
  if (zlat.size() != a.latent) throw InvalidInput("latent vector length mismatch");
  if (cond.size() != a.conditions) throw InvalidInput("condition vector length mismatch");
  if (skips.size() != a.blocks()) throw InvalidInput("decoder needs one skip tensor per block");

  std::vector<double> input(zlat.begin(), zlat.end());
  input.insert(input.end(), cond.begin(), cond.end());
  std::vector<double> grid_pre = dense(w.latent_to_grid.weight, w.latent_to_grid.bias, input);
  Tensor h({a.channels.back(), a.bottleneck_side(), a.bottleneck_side()}, 0.0);
  for (std::size_t i = 0; i < grid_pre.size(); ++i) h[i] = std::max(grid_pre[i], 0.0);
  if (trace) {
    trace->input = input;
    trace->grid_preact = grid_pre;
    trace->block_inputs.clear();
    trace->preacts.clear();
  }
  for (std::size_t j = 0; j < a.blocks(); ++j) {
    const Tensor& skip = skips[a.blocks() - 1 - j];
    Tensor joined = concat_channels(upsample_nearest(h), skip);
    Tensor pre = conv2d(joined, w.decoder[j].kernel, w.decoder[j].bias);
    h = relu(pre);
    if (trace) {
      trace->block_inputs.push_back(std::move(joined));
      trace->preacts.push_back(std::move(pre));
    }
  }
  Tensor recon = conv2d(h, w.output.kernel, w.output.bias);
  if (trace) trace->last_activation = std::move(h);
  return recon;
}

Tensor cvae_infer(const Tensor& x, std::span<const double> cond, const ModelWeights& w) {
  EncoderOutput enc = encoder_forward(x, cond, w);
  return decoder_forward(enc.stats.mu, cond, enc.skips, w);
}

double kl_divergence(const LatentStats& stats) {
  double kl = 0.0;
  for (std::size_t i = 0; i < stats.mu.size(); ++i) {
    const double lv = stats.logvar[i];
    kl += -0.5 * (1.0 + lv - stats.mu[i] * stats.mu[i] - std::exp(lv));
  }
  return kl;
}

double elbo_loss(const Tensor& x, const Tensor& recon, const LatentStats& stats) {
  if (x.size() != recon.size()) throw InvalidInput("elbo_loss: image and reconstruction sizes differ");
  if (stats.mu.size() != stats.logvar.size()) throw InvalidInput("elbo_loss: latent stats lengths differ");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - recon[i];
    sq += r * r;
  }
  return kl_divergence(stats) + 0.5 * sq;
}

namespace {

std::vector<double> reparameterize(const LatentStats& s, std::span<const double> eps) {
  if (eps.size() != s.mu.size()) throw InvalidInput("latent noise length mismatch");
  std::vector<double> z(s.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = s.mu[i] + std::exp(0.5 * s.logvar[i]) * eps[i];
  return z;
}

}  // namespace

double elbo_objective(const Sample& sample, const ModelWeights& w, std::span<const double> eps) {
  EncoderOutput enc = encoder_forward(sample.image, sample.cond, w);
  const std::vector<double> z = reparameterize(enc.stats, eps);
  Tensor recon = decoder_forward(z, sample.cond, enc.skips, w);
  return elbo_loss(sample.image, recon, enc.stats);
}

BatchGradient backward(std::span<const Sample> batch, const ModelWeights& w,
                       std::span<const std::vector<double>> eps) {
  if (batch.empty()) throw InvalidInput("backward: empty batch");
  if (eps.size() != batch.size()) throw InvalidInput("backward: need one noise vector per sample");
  const ArchitectureSpec& a = w.arch;
  const std::size_t B = a.blocks();
  BatchGradient out{0.0, ModelWeights::zeros(a)};
  ModelWeights& g = out.grad;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Sample& sample = batch[s];
    EncoderOutput enc = encoder_forward(sample.image, sample.cond, w);
    const std::vector<double> z = reparameterize(enc.stats, eps[s]);
    DecoderTrace trace;
    Tensor recon = decoder_forward(z, sample.cond, enc.skips, w, &trace);
    out.loss += elbo_loss(sample.image, recon, enc.stats);

    Tensor grad_recon = recon;
    for (std::size_t i = 0; i < recon.size(); ++i) grad_recon[i] = recon[i] - sample.image[i];

    ConvGradients og = conv2d_backward(trace.last_activation, w.output.kernel, grad_recon.reshaped({1, a.side, a.side}));
    add_conv_grads(g.output, og);
    Tensor grad_h = std::move(og.input);

    std::vector<Tensor> grad_skips;
    for (const auto& sk : enc.skips) grad_skips.emplace_back(sk.shape());

    for (std::size_t jj = B; jj-- > 0;) {
      relu_mask(grad_h, trace.preacts[jj]);
      ConvGradients cg = conv2d_backward(trace.block_inputs[jj], w.decoder[jj].kernel, grad_h);
      add_conv_grads(g.decoder[jj], cg);
      const std::size_t skip_idx = B - 1 - jj;
      const Tensor& skip = enc.skips[skip_idx];
      const std::size_t up_channels = cg.input.channels() - skip.channels();
      const std::size_t plane = skip.height() * skip.width();
      Tensor grad_up = Tensor::image(up_channels, skip.height(), skip.width());
      std::copy(cg.input.raw(), cg.input.raw() + up_channels * plane, grad_up.raw());
      Tensor& gs = grad_skips[skip_idx];
      for (std::size_t i = 0; i < gs.size(); ++i) gs[i] += cg.input[up_channels * plane + i];
      grad_h = upsample_nearest_backward(grad_up);
    }

    // Deepest grid: relu over the dense output.
    std::vector<double> grad_grid(grad_h.data());
    for (std::size_t i = 0; i < grad_grid.size(); ++i)
      if (!(trace.grid_preact[i] > 0.0)) grad_grid[i] = 0.0;
    std::vector<double> grad_input;
    dense_backward(w.latent_to_grid, trace.input, grad_grid, g.latent_to_grid, &grad_input);

    const std::size_t L = a.latent;
    std::vector<double> grad_mu(L), grad_lv(L);
    for (std::size_t i = 0; i < L; ++i) {
      const double lv = enc.stats.logvar[i];
      const double gz = grad_input[i];
      grad_mu[i] = gz + enc.stats.mu[i];
      grad_lv[i] = gz * 0.5 * std::exp(0.5 * lv) * eps[s][i] + 0.5 * (std::exp(lv) - 1.0);
    }
    std::vector<double> gb_mu, gb_lv;
    dense_backward(w.mu, enc.bottleneck, grad_mu, g.mu, &gb_mu);
    dense_backward(w.logvar, enc.bottleneck, grad_lv, g.logvar, &gb_lv);

    const std::size_t bs = a.bottleneck_side();
    Tensor grad_pooled({a.channels.back(), bs, bs}, 0.0);
    for (std::size_t i = 0; i < grad_pooled.size(); ++i) grad_pooled[i] = gb_mu[i] + gb_lv[i];

    for (std::size_t b = B; b-- > 0;) {
      Tensor grad_act = maxpool2_backward(grad_pooled, enc.argmax[b], enc.skips[b].shape());
      for (std::size_t i = 0; i < grad_act.size(); ++i) grad_act[i] += grad_skips[b][i];
      relu_mask(grad_act, enc.preacts[b]);
      ConvGradients cg = conv2d_backward(enc.block_inputs[b], w.encoder[b].kernel, grad_act);
      add_conv_grads(g.encoder[b], cg);
      grad_pooled = std::move(cg.input);
    }
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  out.loss *= scale;
  for (auto span : g.parameters())
    for (double& v : span) v *= scale;
  return out;
}

}  // namespace siad

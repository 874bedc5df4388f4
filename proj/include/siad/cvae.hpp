#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "siad/tensor.hpp"

namespace siad {

// Network layout. The encoder runs `channels.size()` blocks of
// conv -> relu -> maxpool2; the decoder mirrors them with
// upsample -> concat(skip) -> conv -> relu, then a linear output conv.
struct ArchitectureSpec {
  std::uint32_t side = 16;
  std::vector<std::uint32_t> channels{8, 16};
  std::uint32_t latent = 4;
  std::uint32_t kernel = 3;
  std::uint32_t conditions = 2;

  std::size_t blocks() const noexcept { return channels.size(); }
  std::size_t pixels() const noexcept { return std::size_t{side} * side; }
  std::size_t bottleneck_side() const noexcept { return side >> blocks(); }
  std::size_t bottleneck_size() const noexcept {
    return std::size_t{channels.back()} * bottleneck_side() * bottleneck_side();
  }
  void validate() const;

  static ArchitectureSpec desk() { return {}; }
  // 80x80 input, three blocks, 128 channels at the deepest, latent 10.
  static ArchitectureSpec paper() { return {80, {32, 64, 128}, 10, 3, 2}; }

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct ConvLayer {
  Tensor kernel;  // (out, in, k, k)
  std::vector<double> bias;
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct DenseLayer {
  Tensor weight;  // (out, in)
  std::vector<double> bias;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ModelWeights {
  ArchitectureSpec arch;
  std::vector<ConvLayer> encoder;  // shallow block first
  DenseLayer mu;
  DenseLayer logvar;
  DenseLayer latent_to_grid;       // [z; cond] -> deepest decoder grid
  std::vector<ConvLayer> decoder;  // deepest block first
  ConvLayer output;

  static ModelWeights zeros(const ArchitectureSpec& arch);
  // Uniform in +-sqrt(6/(fan_in+fan_out)); biases zero.
  static ModelWeights initialize(const ArchitectureSpec& arch, std::uint64_t seed);

  // Every parameter array in serialization order.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;
  // Throws if shapes are inconsistent with arch or any entry is non-finite.
  void validate() const;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct LatentStats {
  std::vector<double> mu;
  std::vector<double> logvar;
};

struct Sample {
  Tensor image;  // (1, side, side)
  std::vector<double> cond;
};

struct EncoderOutput {
  LatentStats stats;
  std::vector<Tensor> skips;  // post-relu, pre-pool activation of each block
  // Retained for backpropagation.
  std::vector<Tensor> block_inputs;
  std::vector<Tensor> preacts;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<double> bottleneck;
};

struct DecoderTrace {
  std::vector<double> input;  // [z; cond]
  std::vector<double> grid_preact;
  std::vector<Tensor> block_inputs;  // concatenated (upsampled, skip)
  std::vector<Tensor> preacts;
  Tensor last_activation;
};

// Encoder input: the image plus one constant channel per condition.
Tensor encoder_input(const Tensor& x, std::span<const double> cond, const ArchitectureSpec& arch);

EncoderOutput encoder_forward(const Tensor& x, std::span<const double> cond, const ModelWeights& w);
Tensor decoder_forward(std::span<const double> zlat, std::span<const double> cond, const std::vector<Tensor>& skips,
                       const ModelWeights& w, DecoderTrace* trace = nullptr);

// Deterministic reconstruction through the latent mean.
Tensor cvae_infer(const Tensor& x, std::span<const double> cond, const ModelWeights& w);

// Negative ELBO: KL(q || N(0, I)) + 0.5 * ||x - recon||^2.
double elbo_loss(const Tensor& x, const Tensor& recon, const LatentStats& stats);
double kl_divergence(const LatentStats& stats);

// Loss with the reparameterized latent z = mu + exp(logvar/2) * eps.
double elbo_objective(const Sample& sample, const ModelWeights& w, std::span<const double> eps);

struct BatchGradient {
  double loss = 0.0;  // mean over the batch
  ModelWeights grad;  // mean over the batch
};

// Exact gradient of the mean negative ELBO; eps holds one latent noise
// vector per sample.
BatchGradient backward(std::span<const Sample> batch, const ModelWeights& w,
                       std::span<const std::vector<double>> eps);

}  // namespace siad

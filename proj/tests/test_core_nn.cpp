#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "siad/cvae.hpp"
#include "siad/error.hpp"
#include "siad/layers.hpp"
#include "siad/optim.hpp"
#include "siad/random.hpp"
#include "siad/synth.hpp"
#include "siad/train.hpp"

using namespace siad;

namespace {

Tensor random_image(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  RandomStream rs(seed);
  Tensor t = Tensor::image(c, h, w);
  for (double& v : t.values()) v = rs.normal();
  return t;
}

Tensor random_kernel(std::size_t o, std::size_t c, std::size_t k, std::uint64_t seed) {
  RandomStream rs(seed);
  Tensor t({o, c, k, k});
  for (double& v : t.values()) v = rs.normal();
  return t;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  RandomStream rs(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rs.normal();
  return v;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("data length must match the shape") {
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), InvalidInput);
    CHECK_NOTHROW(Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
  }
  TEST_CASE("non-finite entries are rejected") {
    CHECK_THROWS_AS(Tensor({1}, std::vector<double>{NAN}), InvalidInput);
    CHECK_THROWS_AS(Tensor({1}, std::vector<double>{INFINITY}), InvalidInput);
  }
}

TEST_SUITE("conv2d") {
  TEST_CASE("1x1 unit kernel is the identity") {
    const Tensor x = random_image(1, 5, 4, 1);
    const Tensor k({1, 1, 1, 1}, std::vector<double>{1.0});
    CHECK(conv2d(x, k, std::vector<double>{0.0}) == x);
  }
  TEST_CASE("all-ones 3x3 kernel on a constant image") {
    const double c = 1.75;
    const Tensor x = Tensor::image(1, 5, 5, c);
    const Tensor out = conv2d(x, Tensor({1, 1, 3, 3}, 1.0), {});
    CHECK(out.at(0, 2, 2) == doctest::Approx(9 * c));
    CHECK(out.at(0, 0, 0) == doctest::Approx(4 * c));
    CHECK(out.at(0, 4, 4) == doctest::Approx(4 * c));
    CHECK(out.at(0, 0, 2) == doctest::Approx(6 * c));
  }
  TEST_CASE("homogeneous without bias") {
    const Tensor x = random_image(1, 4, 4, 2);
    const Tensor k = random_kernel(2, 1, 3, 3);
    Tensor scaled = x;
    for (double& v : scaled.values()) v *= 2.5;
    Tensor expect = conv2d(x, k, {});
    for (double& v : expect.values()) v *= 2.5;
    CHECK(max_abs_diff(conv2d(scaled, k, {}), expect) < 1e-12);
  }
  TEST_CASE("additive without bias") {
    const Tensor x = random_image(3, 6, 6, 4), y = random_image(3, 6, 6, 5);
    const Tensor k = random_kernel(2, 3, 3, 6);
    Tensor sum = x;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += y[i];
    Tensor expect = conv2d(x, k, {});
    const Tensor cy = conv2d(y, k, {});
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += cy[i];
    CHECK(max_abs_diff(conv2d(sum, k, {}), expect) < 1e-12);
  }
  TEST_CASE("matches window summation on random input") {
    const Tensor x = random_image(3, 6, 5, 7);
    const Tensor k = random_kernel(4, 3, 5, 8);
    const std::vector<double> b = random_vector(4, 9);
    CHECK(max_abs_diff(conv2d(x, k, b), oracle::conv(x, k, b)) < 1e-12);
  }
  TEST_CASE("affine pair convolution restricted to a box") {
    const Tensor off = random_image(3, 6, 6, 10), slope = random_image(3, 6, 6, 11);
    const Tensor k = random_kernel(2, 3, 3, 12);
    const std::vector<double> b = random_vector(2, 13);
    const Box box{1, 4, 2, 6};
    std::vector<double> oo(2 * 36), os(2 * 36);
    conv2d_affine(off.raw(), slope.raw(), 3, 6, 6, k, b, box, oo.data(), os.data());
    const Tensor eo = oracle::conv(off, k, b), es = oracle::conv(slope, k, {});
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x) {
          const std::size_t i = (o * 6 + y) * 6 + x;
          const bool inside = y >= box.y0 && y < box.y1 && x >= box.x0 && x < box.x1;
          CHECK(oo[i] == doctest::Approx(inside ? eo.at(o, y, x) : 0.0).epsilon(1e-12));
          CHECK(os[i] == doctest::Approx(inside ? es.at(o, y, x) : 0.0).epsilon(1e-12));
        }
  }
  TEST_CASE("shape errors") {
    const Tensor x = random_image(2, 4, 4, 1);
    CHECK_THROWS_AS(conv2d(x, Tensor({1, 3, 3, 3}), {}), InvalidInput);
    CHECK_THROWS_AS(conv2d(x, Tensor({1, 2, 2, 2}), {}), InvalidInput);
    CHECK_THROWS_AS(conv2d(x, Tensor({1, 2, 3, 3}), std::vector<double>{1, 2}), InvalidInput);
  }
}

TEST_SUITE("relu") {
  TEST_CASE("clamps negatives") {
    const Tensor t({3}, std::vector<double>{-1, 0, 2});
    CHECK(relu(t) == Tensor({3}, std::vector<double>{0, 0, 2}));
  }
  TEST_CASE("nonnegative input unchanged and idempotent") {
    Tensor t = random_image(2, 3, 3, 3);
    CHECK(relu(relu(t)) == relu(t));
    for (double& v : t.values()) v = std::abs(v);
    CHECK(relu(t) == t);
  }
}

TEST_SUITE("maxpool2") {
  TEST_CASE("single window") {
    const PoolResult r = maxpool2(Tensor({1, 2, 2}, std::vector<double>{1, 2, 3, 4}));
    CHECK(r.output[0] == 4.0);
    CHECK(r.argmax[0] == 3u);
  }
  TEST_CASE("ties go to the top-left entry") {
    const PoolResult r = maxpool2(Tensor::image(2, 4, 4, 3.0));
    for (std::size_t i = 0; i < r.output.size(); ++i) {
      CHECK(r.output[i] == 3.0);
      const std::size_t c = i / 4, y = (i % 4) / 2, x = i % 2;
      CHECK(r.argmax[i] == (c * 4 + 2 * y) * 4 + 2 * x);
    }
  }
  TEST_CASE("matches exhaustive window scan") {
    const Tensor x = random_image(3, 4, 4, 21);
    const PoolResult r = maxpool2(x);
    CHECK(r.output == oracle::pool(x));
    for (std::size_t i = 0; i < r.output.size(); ++i) CHECK(x[r.argmax[i]] == r.output[i]);
  }
  TEST_CASE("odd extents rejected") { CHECK_THROWS_AS(maxpool2(Tensor::image(1, 3, 4)), InvalidInput); }
}

TEST_SUITE("upsample_nearest") {
  TEST_CASE("replicates into 2x2 blocks") {
    CHECK(upsample_nearest(Tensor({1, 1, 1}, std::vector<double>{5})) == Tensor::image(1, 2, 2, 5.0));
  }
  TEST_CASE("homogeneous") {
    Tensor x = random_image(2, 3, 3, 22);
    Tensor up = upsample_nearest(x);
    for (double& v : x.values()) v *= -1.5;
    for (double& v : up.values()) v *= -1.5;
    CHECK(upsample_nearest(x) == up);
  }
  TEST_CASE("pooling undoes upsampling") {
    const Tensor x = random_image(2, 3, 5, 23);
    CHECK(maxpool2(upsample_nearest(x)).output == x);
  }
}

TEST_SUITE("cvae forward") {
  const ArchitectureSpec tiny{8, {3, 4}, 3, 3, 2};

  TEST_CASE("architecture validation") {
    CHECK_NOTHROW(ArchitectureSpec::desk().validate());
    CHECK_NOTHROW(ArchitectureSpec::paper().validate());
    CHECK_THROWS_AS((ArchitectureSpec{10, {4, 8}, 2, 3, 2}.validate()), InvalidInput);
    CHECK_THROWS_AS((ArchitectureSpec{8, {4}, 0, 3, 2}.validate()), InvalidInput);
  }
  TEST_CASE("zero weights give zero latent stats and zero image") {
    const ModelWeights w = ModelWeights::zeros(tiny);
    const Tensor x = random_image(1, 8, 8, 31);
    const EncoderOutput enc = encoder_forward(x, std::vector<double>{0.4, -1.0}, w);
    for (double v : enc.stats.mu) CHECK(v == 0.0);
    for (double v : enc.stats.logvar) CHECK(v == 0.0);
    CHECK(cvae_infer(x, std::vector<double>{0.4, -1.0}, w) == Tensor::image(1, 8, 8));
  }
  TEST_CASE("inference is bit-reproducible") {
    const ModelWeights w = oracle::random_model(tiny, 5);
    const Tensor x = random_image(1, 8, 8, 32);
    const std::vector<double> cond{0.3, 0.1};
    CHECK(encoder_forward(x, cond, w).stats.mu == encoder_forward(x, cond, w).stats.mu);
    CHECK(cvae_infer(x, cond, w) == cvae_infer(x, cond, w));
  }
  TEST_CASE("reconstruction matches the layer-by-layer oracle") {
    const ModelWeights w = oracle::random_model(tiny, 6);
    const Tensor x = random_image(1, 8, 8, 33);
    const std::vector<double> cond{-0.7, 1.2};
    CHECK(max_abs_diff(cvae_infer(x, cond, w), oracle::reconstruct(x, cond, w)) < 1e-12);
  }
  TEST_CASE("hand-unrolled single-block decoder on 4x4") {
    const ArchitectureSpec a{4, {2}, 2, 3, 2};
    const ModelWeights w = oracle::random_model(a, 7);
    const std::vector<double> z{0.5, -0.25}, cond{1.0, -1.0};
    const Tensor skip = oracle::relu(random_image(2, 4, 4, 34));

    // grid = relu(L [z; cond] + b), reshaped to (2, 2, 2)
    std::vector<double> gin{z[0], z[1], cond[0], cond[1]};
    std::vector<double> grid(8);
    for (std::size_t o = 0; o < 8; ++o) {
      double s = w.latent_to_grid.bias[o];
      for (std::size_t i = 0; i < 4; ++i) s += w.latent_to_grid.weight[o * 4 + i] * gin[i];
      grid[o] = s > 0 ? s : 0;
    }
    // block: concat(upsample(grid), skip) -> 3x3 conv -> relu, then output conv
    Tensor joined = Tensor::image(4, 4, 4);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
          joined.at(c, y, x) = grid[(c * 2 + y / 2) * 2 + x / 2];
          joined.at(c + 2, y, x) = skip.at(c, y, x);
        }
    const Tensor hidden = oracle::relu(oracle::conv(joined, w.decoder[0].kernel, w.decoder[0].bias));
    const Tensor expect = oracle::conv(hidden, w.output.kernel, w.output.bias);
    CHECK(max_abs_diff(decoder_forward(z, cond, {skip}, w), expect) < 1e-12);
  }
  TEST_CASE("decoder is positively homogeneous without biases") {
    ModelWeights w = ModelWeights::initialize(tiny, 8);
    for (auto p : w.parameters())
      for (double& v : p) v = std::abs(v);
    for (auto* l : {&w.latent_to_grid}) std::fill(l->bias.begin(), l->bias.end(), 0.0);
    for (auto& l : w.decoder) std::fill(l.bias.begin(), l.bias.end(), 0.0);
    std::fill(w.output.bias.begin(), w.output.bias.end(), 0.0);
    std::vector<double> z{0.5, 1.0, 0.2};
    const std::vector<double> cond{0.0, 0.0};
    std::vector<Tensor> skips{oracle::relu(random_image(3, 8, 8, 35)), oracle::relu(random_image(4, 4, 4, 36))};
    Tensor expect = decoder_forward(z, cond, skips, w);
    for (double& v : expect.values()) v *= 2;
    for (double& v : z) v *= 2;
    for (auto& s : skips)
      for (double& v : s.values()) v *= 2;
    CHECK(max_abs_diff(decoder_forward(z, cond, skips, w), expect) < 1e-12);
  }
  TEST_CASE("mu path is piecewise-linear along a line") {
    const ModelWeights w = oracle::random_model(tiny, 9);
    const Tensor x = random_image(1, 8, 8, 37), d = random_image(1, 8, 8, 38);
    const std::vector<double> cond{0.2, -0.4};
    auto mu_at = [&](double t) {
      Tensor p = x;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] += t * d[i];
      return encoder_forward(p, cond, w).stats.mu;
    };
    // On most short sub-intervals the slope is constant: the midpoint equals the endpoint average.
    std::size_t linear = 0, total = 0;
    for (int s = 0; s < 200; ++s) {
      const double t0 = -1.0 + 0.01 * s, h = 1e-4;
      const auto m0 = mu_at(t0), m1 = mu_at(t0 + h), m2 = mu_at(t0 + 2 * h);
      bool ok = true;
      for (std::size_t i = 0; i < m0.size(); ++i)
        if (std::abs((m2[i] - m1[i]) - (m1[i] - m0[i])) > 1e-10) ok = false;
      linear += ok;
      ++total;
    }
    CHECK(linear >= total - 10);
  }
}

TEST_SUITE("elbo") {
  TEST_CASE("perfect reconstruction at the prior gives zero") {
    const Tensor x = random_image(1, 4, 4, 41);
    CHECK(elbo_loss(x, x, {{0.0}, {0.0}}) == 0.0);
  }
  TEST_CASE("unit mean shift costs one half") {
    const Tensor x = random_image(1, 4, 4, 42);
    CHECK(elbo_loss(x, x, {{1.0}, {0.0}}) == doctest::Approx(0.5).epsilon(1e-15));
  }
  TEST_CASE("unit residual in one pixel costs one half") {
    const Tensor x = random_image(1, 4, 4, 43);
    Tensor r = x;
    r[5] += 1.0;
    CHECK(elbo_loss(x, r, {{0.0}, {0.0}}) == doctest::Approx(0.5).epsilon(1e-12));
  }
  TEST_CASE("loss decomposes into KL plus half squared residual") {
    const Tensor x = random_image(1, 4, 4, 44), r = random_image(1, 4, 4, 45);
    const LatentStats s{{0.3, -1.2}, {0.5, -0.2}};
    double kl = 0.0;
    for (std::size_t i = 0; i < 2; ++i) kl += -0.5 * (1 + s.logvar[i] - s.mu[i] * s.mu[i] - std::exp(s.logvar[i]));
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - r[i]) * (x[i] - r[i]);
    CHECK(kl_divergence(s) == doctest::Approx(kl).epsilon(1e-14));
    CHECK(elbo_loss(x, r, s) == doctest::Approx(kl + 0.5 * sq).epsilon(1e-14));
  }
}

TEST_SUITE("backward") {
  const ArchitectureSpec small{8, {4, 8}, 3, 3, 2};

  TEST_CASE("zero residual at the prior gives zero gradients") {
    const ModelWeights w = ModelWeights::zeros(small);
    const std::vector<Sample> batch{{Tensor::image(1, 8, 8), {0.5, -0.5}}};
    const std::vector<std::vector<double>> eps{{0.0, 0.0, 0.0}};
    const BatchGradient g = backward(batch, w, eps);
    CHECK(g.loss == 0.0);
    for (auto p : g.grad.parameters())
      for (double v : p) CHECK(v == 0.0);
  }
  TEST_CASE("KL gradient with respect to mu equals mu") {
    ModelWeights w = oracle::random_model(small, 11);
    for (auto* l : {&w.latent_to_grid}) {
      l->weight.fill(0.0);
      std::fill(l->bias.begin(), l->bias.end(), 0.0);
    }
    for (auto& l : w.decoder) {
      l.kernel.fill(0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    w.output.kernel.fill(0.0);
    std::fill(w.output.bias.begin(), w.output.bias.end(), 0.0);
    const std::vector<Sample> batch{{random_image(1, 8, 8, 46), {0.1, 0.2}}};
    const std::vector<std::vector<double>> eps{{0.3, -0.6, 1.1}};
    const BatchGradient g = backward(batch, w, eps);
    const auto mu = encoder_forward(batch[0].image, batch[0].cond, w).stats.mu;
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(g.grad.mu.bias[i] == mu[i]);
  }
  TEST_CASE("loss matches the reparameterized objective") {
    const ModelWeights w = oracle::random_model(small, 12);
    const std::vector<Sample> batch{{random_image(1, 8, 8, 47), {0.1, 0.2}}, {random_image(1, 8, 8, 48), {-1, 1}}};
    const std::vector<std::vector<double>> eps{{0.3, -0.6, 1.1}, {0.0, 0.2, -0.1}};
    const double expect = 0.5 * (elbo_objective(batch[0], w, eps[0]) + elbo_objective(batch[1], w, eps[1]));
    CHECK(backward(batch, w, eps).loss == doctest::Approx(expect).epsilon(1e-14));
  }
  TEST_CASE("every gradient matches central finite differences on an 8x8 model") {
    const ModelWeights w = oracle::random_model(small, 13);
    const std::vector<Sample> batch{{random_image(1, 8, 8, 49), {0.4, -0.3}}, {random_image(1, 8, 8, 50), {-1, 0.5}}};
    const std::vector<std::vector<double>> eps{{0.5, -0.2, 0.9}, {-0.4, 0.1, 0.3}};
    const BatchGradient g = backward(batch, w, eps);
    const oracle::GradientCheck r = oracle::gradient_check(w, batch, eps, g.grad, {1e-5}, 1e-4);
    CHECK(r.bad == 0);
    CHECK(r.kinked * 100 <= r.checked);
    CHECK(r.checked + r.kinked == w.parameter_count());
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves weights unchanged") {
    std::vector<double> w{1.0, -2.0}, g{0.0, 0.0}, m(2, 0.0), v(2, 0.0);
    adam_update(w, g, m, v, 1, {0.1, 0.9, 0.999, 1e-8});
    CHECK(w == std::vector<double>{1.0, -2.0});
  }
  TEST_CASE("first step with unit gradient") {
    std::vector<double> w{0.0}, g{1.0}, m{0.0}, v{0.0};
    adam_update(w, g, m, v, 1, {0.1, 0.9, 0.999, 1e-8});
    // m = 0.1, v = 0.001; bias-corrected m_hat = v_hat = 1.
    const double m_hat = (0.1 * 1.0) / (1 - 0.9), v_hat = (0.001 * 1.0) / (1 - 0.999);
    CHECK(w[0] == doctest::Approx(-0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-14));
    CHECK(w[0] == doctest::Approx(-0.0999999990).epsilon(1e-9));
    CHECK(m[0] == doctest::Approx(0.1));
    CHECK(v[0] == doctest::Approx(0.001));
  }
  TEST_CASE("identical calls are bit-identical") {
    const ArchitectureSpec a{8, {4, 8}, 3, 3, 2};
    const ModelWeights w0 = ModelWeights::initialize(a, 3);
    const ModelWeights g = oracle::random_model(a, 4);
    ModelWeights w1 = w0, w2 = w0;
    AdamState s1(a), s2(a);
    s1.step(w1, g, {});
    s2.step(w2, g, {});
    CHECK(w1 == w2);
    CHECK(s1.steps() == 1);
  }
}

TEST_SUITE("training") {
  const ArchitectureSpec a{8, {4, 8}, 3, 3, 2};

  std::vector<Sample> healthy(std::size_t n, std::uint64_t stream) {
    std::vector<Sample> out;
    for (const FlowImage& f : gen_null_cohort(n, 8, 1.0, 99, stream)) out.push_back({f.values, {0.1, -0.1}});
    return out;
  }

  TEST_CASE("training does not increase the loss and is seeded") {
    const auto tr = healthy(24, 1), ho = healthy(8, 2);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.adam.lr = 1e-3;
    const TrainResult r1 = train(tr, ho, a, cfg);
    const TrainResult r2 = train(tr, ho, a, cfg);
    CHECK(r1.weights == r2.weights);
    CHECK(r1.curve.size() == 5);
    CHECK(r1.curve.back().train_loss <= r1.curve.front().train_loss);
    for (std::size_t e = 1; e < r1.curve.size(); ++e) CHECK(r1.curve[e].best_holdout <= r1.curve[e - 1].best_holdout);
  }
  TEST_CASE("early stopping after the patience window") {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.patience = 3;
    cfg.min_delta = 1e12;
    const TrainResult r = train(healthy(8, 3), healthy(4, 4), a, cfg);
    CHECK(r.early_stopped);
    CHECK(r.curve.size() == 4);
    CHECK(r.curve.back().early_stop);
    CHECK(r.best_epoch == 0);
  }
  TEST_CASE("planted anomalies reconstruct worse than healthy held-out maps") {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 8;
    cfg.adam.lr = 1e-3;
    const TrainResult r = train(healthy(40, 5), healthy(10, 6), a, cfg);
    SignalSpec sig{centered_block(8, 2), 4.0, SignalSpec::Shape::Plateau};
    const DiseasedCohort sick = gen_diseased(10, 8, sig, 1.0, 99, 7);
    auto sq_err = [&](const Tensor& x) {
      const Tensor rec = cvae_infer(x, std::vector<double>{0.1, -0.1}, r.weights);
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - rec[i]) * (x[i] - rec[i]);
      return s;
    };
    double h = 0, d = 0;
    for (const Sample& s : healthy(10, 6)) h += sq_err(s.image);
    for (const FlowImage& f : sick.images) d += sq_err(f.values);
    CHECK(h < d);
  }
  TEST_CASE("empty dataset rejected") {
    CHECK_THROWS_AS(train({}, {}, a, {}), InvalidInput);
  }
}

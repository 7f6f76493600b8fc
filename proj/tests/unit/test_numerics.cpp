#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "ufnd/gradcheck.hpp"
#include "ufnd/ops.hpp"
#include "ufnd/optim.hpp"
#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"

using namespace ufnd;

namespace {

// Plain triple loop, kept apart from the blocked kernels.
Tensor naive_mm(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += double(a(i, p)) * double(b(p, j));
      c(i, j) = static_cast<float>(s);
    }
  return c;
}

double norm_of(std::vector<Parameter<float>*> ps) {
  double s = 0.0;
  for (auto* p : ps)
    for (float g : p->grad.storage()) s += double(g) * double(g);
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("matmul hand cases") {
  Tensor id({2, 2}, {1, 0, 0, 1});
  Tensor a({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(id, a) == a);

  Tensor ones({2, 1}, {1, 1});
  auto c = matmul(a, ones);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c[0] == 3.0f);
  CHECK(c[1] == 7.0f);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a({2, 3});
  Tensor b({2, 2});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("matmul transpose identity against naive loop") {
  Rng rng(11, "test");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    auto a = testing::random_tensor<float>({m, k}, rng);
    auto b = testing::random_tensor<float>({k, n}, rng);
    auto ab = matmul(a, b);
    auto oracle = naive_mm(a, b);
    auto bt_at = matmul(transpose(b), transpose(a));
    auto abt = transpose(ab);
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(ab[i] - oracle[i]) < 1e-5);
    for (std::size_t i = 0; i < abt.size(); ++i) CHECK(std::abs(abt[i] - bt_at[i]) < 1e-5);
  }
}

TEST_CASE("batched matmul maps over the leading axis") {
  Rng rng(3, "test");
  auto a = testing::random_tensor<float>({3, 2, 4}, rng);
  auto b = testing::random_tensor<float>({3, 4, 5}, rng);
  auto c = matmul(a, b);
  REQUIRE(c.shape() == Shape{3, 2, 5});
  for (std::size_t s = 0; s < 3; ++s) {
    Tensor as({2, 4}, std::vector<float>(a.data() + s * 8, a.data() + s * 8 + 8));
    Tensor bs({4, 5}, std::vector<float>(b.data() + s * 20, b.data() + s * 20 + 20));
    auto o = naive_mm(as, bs);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(c[s * 10 + i] - o[i]) < 1e-5);
  }
}

TEST_CASE("log_softmax examples") {
  auto y = log_softmax(Tensor({1, 2}, {0, 0}));
  CHECK(y[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-7));
  CHECK(y[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-7));

  auto single = log_softmax(Tensor({1, 1}, {42.0f}));
  CHECK(single[0] == 0.0f);

  auto big = log_softmax(Tensor({1, 2}, {1000.0f, 0.0f}));
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(0.0));
}

TEST_CASE("log_softmax rows normalise for large inputs") {
  Rng rng(5, "test");
  auto x = testing::random_tensor<double>({200, 7}, rng, 1e4);
  auto y = log_softmax(x);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double s = 0.0;
    for (double v : y.row(r)) s += std::exp(v);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("log_softmax keeps float precision at large magnitudes") {
  Rng rng(6, "test");
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    auto x = testing::random_tensor<float>({1, 9}, rng, 1e4);
    double s = 0.0;
    const auto lp = log_softmax(x);
    for (float v : lp.row(0)) s += std::exp(double(v));
    worst = std::max(worst, std::abs(s - 1.0));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gelu values") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(std::abs(gelu(10.0) - 10.0) < 1e-6);
  // Phi(1) from an independent erfc evaluation.
  const double phi1 = 0.5 * std::erfc(-1.0 / std::sqrt(2.0));
  CHECK(gelu(1.0) == doctest::Approx(phi1).epsilon(1e-12));
  CHECK(gelu(1.0) == doctest::Approx(0.84134).epsilon(1e-5));
  CHECK(gelu_variant == "erf");
}

TEST_CASE("gelu derivative matches central differences") {
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    const double h = 1e-5;
    const double numeric = (gelu(x + h) - gelu(x - h)) / (2 * h);
    CHECK(gelu_grad(x) == doctest::Approx(numeric).epsilon(1e-7));
  }
}

TEST_CASE("layer_norm cases") {
  Tensor gain({3}, 1.0f), bias({3}, 0.0f);
  auto z = layer_norm(Tensor({1, 3}, {5, 5, 5}), gain, bias, 1e-12f);
  for (float v : z.storage()) CHECK(v == 0.0f);

  BasicTensor<double> g({3}, 1.0), b({3}, 0.0);
  auto y = layer_norm(BasicTensor<double>({1, 3}, {1, 2, 3}), g, b, 1e-15);
  const double r = std::sqrt(1.5);
  CHECK(y[0] == doctest::Approx(-r).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(r).epsilon(1e-9));
}

TEST_CASE("layer_norm backward matches central differences") {
  Rng rng(9, "test");
  Parameter<double> x("x", testing::random_tensor<double>({3, 5}, rng));
  Parameter<double> gain("gain", testing::random_tensor<double>({5}, rng));
  Parameter<double> bias("bias", testing::random_tensor<double>({5}, rng));
  auto w = testing::random_tensor<double>({3, 5}, rng);
  auto loss = [&] {
    auto y = layer_norm(x.value, gain.value, bias.value, 1e-12);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
  };
  LayerNormCache<double> cache;
  layer_norm(x.value, gain.value, bias.value, 1e-12, &cache);
  x.grad = layer_norm_backward(w, gain.value, cache, gain.grad, bias.grad);
  auto r = grad_check<double>(loss, {&x, &gain, &bias}, {.step = 1e-5});
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("dropout modes") {
  Rng rng(1, "dropout");
  Tensor x({4, 4}, 2.5f);
  CHECK(dropout(x, 0.5, Mode::eval, rng) == x);
  CHECK(dropout(x, 0.0, Mode::train, rng) == x);
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::train, rng), std::invalid_argument);
  CHECK_THROWS_AS(dropout(x, -0.1, Mode::eval, rng), std::invalid_argument);
}

TEST_CASE("dropout keeps about 90 percent at rate 0.1") {
  Rng rng(2, "dropout");
  Tensor x({1000, 1000}, 1.0f);
  auto y = dropout(x, 0.1, Mode::train, rng);
  std::size_t kept = 0;
  double sum = 0.0;
  for (float v : y.storage()) {
    if (v != 0.0f) {
      ++kept;
      CHECK_MESSAGE(std::abs(v - 1.0f / 0.9f) < 1e-6, "kept entries are rescaled");
    }
    sum += v;
  }
  const double frac = double(kept) / 1e6;
  CHECK(frac > 0.89);
  CHECK(frac < 0.91);
  CHECK(sum / 1e6 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("dropout is reproducible from the stream") {
  Tensor x({10, 10}, 1.0f);
  Rng a(4, "dropout"), b(4, "dropout");
  CHECK(dropout(x, 0.3, Mode::train, a) == dropout(x, 0.3, Mode::train, b));
}

TEST_CASE("xavier bound, variance and determinism") {
  Rng rng(1, "init");
  auto w = xavier_init<float>({300, 300}, rng);
  for (float v : w.storage()) CHECK_MESSAGE(std::abs(v) <= 0.1f, "entry outside the Glorot bound");

  Rng rng2(2, "init");
  auto big = xavier_init<double>({400, 250}, rng2);
  double mean = std::accumulate(big.storage().begin(), big.storage().end(), 0.0) / big.size();
  double var = 0.0;
  for (double v : big.storage()) var += (v - mean) * (v - mean);
  var /= big.size();
  const double expected = 2.0 / (400 + 250);
  CHECK(std::abs(var - expected) / expected < 0.1);

  Rng r1(7, "init"), r2(7, "init");
  CHECK(xavier_init<float>({5, 3}, r1) == xavier_init<float>({5, 3}, r2));
}

TEST_CASE("clip_global_norm scaling and no-op branch") {
  std::vector<Parameter<float>> ps;
  ps.emplace_back("a", Tensor({2}));
  ps.emplace_back("b", Tensor({1}));
  ps[0].grad = Tensor({2}, {6, 0});
  ps[1].grad = Tensor({1}, {8});
  auto pp = testing::ptrs(ps);
  const double pre = clip_global_norm<float>(pp, 1.0);
  CHECK(pre == doctest::Approx(10.0));
  CHECK(ps[0].grad[0] == doctest::Approx(0.6));
  CHECK(ps[1].grad[0] == doctest::Approx(0.8));
  CHECK(std::abs(norm_of(pp) - 1.0) < 1e-6);

  ps[0].grad = Tensor({2}, {0.3f, 0.0f});
  ps[1].grad = Tensor({1}, {0.4f});
  CHECK(clip_global_norm<float>(pp, 1.0) == doctest::Approx(0.5));
  CHECK(ps[0].grad[0] == 0.3f);
  CHECK(ps[1].grad[0] == 0.4f);
}

TEST_CASE("clip_global_norm never exceeds the clip on random gradients") {
  Rng rng(21, "test");
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Parameter<float>> ps;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      ps.emplace_back("p" + std::to_string(i), Tensor({1 + rng.below(20)}));
      ps.back().grad = testing::random_tensor<float>(ps.back().value.shape(), rng,
                                                     std::pow(10.0, 3.0 * rng.uniform() - 1.0));
    }
    auto pp = testing::ptrs(ps);
    std::vector<Tensor> before;
    for (auto& p : ps) before.push_back(p.grad);
    const double clip = 0.5 + rng.uniform();
    clip_global_norm<float>(pp, clip);
    CHECK(norm_of(pp) <= clip * (1 + 1e-6));
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = 0; j < before[i].size(); ++j)
        CHECK(std::abs(ps[i].grad[j]) <= std::abs(before[i][j]));
  }
}

TEST_CASE("adam first step, zero gradient, quadratic descent") {
  AdamConfig cfg;
  CHECK(cfg.lr == 0.003);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.beta2 == 0.999);
  CHECK(cfg.eps == 1e-8);

  Parameter<double> p("w", BasicTensor<double>({1}, 0.5));
  AdamState<double> s({1});
  p.grad[0] = 1.0;
  adam_step(p, s, cfg);
  CHECK(s.t == 1);
  CHECK(p.value[0] - 0.5 == doctest::Approx(-0.003 / (1 + 1e-8)).epsilon(1e-9));

  Parameter<float> z("z", Tensor({3}, {1.5f, -2.0f, 0.25f}));
  AdamState<float> zs({3});
  const Tensor start = z.value;
  for (int i = 0; i < 25; ++i) {
    z.grad.zero();
    adam_step(z, zs, cfg);
  }
  CHECK(z.value == start);

  Parameter<double> q("q", BasicTensor<double>({1}, 1.0));
  AdamState<double> qs({1});
  double prev = 1.0;
  for (int i = 0; i < 10; ++i) {
    q.grad[0] = 2.0 * q.value[0];
    adam_step(q, qs, cfg);
    CHECK(std::abs(q.value[0]) < prev);
    prev = std::abs(q.value[0]);
  }
}

TEST_CASE("nll loss and gradient") {
  const double l2 = std::log(2.0);
  Tensor lp({1, 2}, {float(-l2), float(-l2)});
  std::vector<int> t0{0};
  auto r = nll_loss<float>(lp, t0);
  CHECK(r.loss == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(r.grad[0] == -1.0f);
  CHECK(r.grad[1] == 0.0f);

  Tensor sure({1, 2}, {0.0f, -1e30f});
  CHECK(nll_loss<float>(sure, t0).loss == doctest::Approx(0.0));

  Tensor two({2, 2}, {-0.1f, -2.4f, -1.2f, -0.4f});
  std::vector<int> t{0, 1};
  auto rb = nll_loss<float>(two, t);
  CHECK(rb.loss == doctest::Approx((0.1 + 0.4) / 2));
  CHECK(rb.grad[0] == -0.5f);
  CHECK(rb.grad[3] == -0.5f);

  std::vector<int> bad{2};
  CHECK_THROWS_AS(nll_loss<float>(lp, bad), std::invalid_argument);
}

TEST_CASE("grad_check on linear plus nll, empty set, and a sign flip") {
  Rng rng(8, "test");
  std::vector<Parameter<float>> ps;
  ps.emplace_back("w", testing::random_tensor<float>({4, 2}, rng));
  ps.emplace_back("b", testing::random_tensor<float>({2}, rng));
  auto x = testing::random_tensor<float>({6, 4}, rng);
  std::vector<int> y{0, 1, 1, 0, 1, 0};

  auto forward = [&] {
    auto z = matmul(x, ps[0].value);
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t c = 0; c < 2; ++c) z(r, c) += ps[1].value[c];
    return log_softmax(z);
  };
  auto loss = [&] { return double(nll_loss<float>(forward(), y).loss); };
  auto backward = [&](bool corrupt) {
    auto lp = forward();
    auto dz = log_softmax_backward(lp, nll_loss<float>(lp, y).grad);
    ps[0].grad = matmul(transpose(x), dz);
    ps[1].grad.zero();
    for (std::size_t r = 0; r < dz.rows(); ++r)
      for (std::size_t c = 0; c < 2; ++c) ps[1].grad[c] += dz(r, c);
    if (corrupt) ps[0].grad[3] = -ps[0].grad[3];
  };

  backward(false);
  CHECK(grad_check<float>(loss, testing::ptrs(ps)).max_rel_error < 1e-3);

  auto empty = grad_check<float>([] { return 0.0; }, {});
  CHECK(empty.max_rel_error == 0.0);
  CHECK(empty.coords_checked == 0);

  backward(true);
  auto bad = grad_check<float>(loss, testing::ptrs(ps));
  CHECK(bad.max_rel_error > 0.1);
  CHECK(bad.worst_param == "w");
}

TEST_CASE("grad_check skips coordinates that cross a kink") {
  // relu(w) * 3 with w right next to the kink.
  std::vector<Parameter<double>> ps;
  ps.emplace_back("w", BasicTensor<double>({2}, {1e-4, 0.5}));
  std::uint64_t pattern = 0;
  auto loss = [&] {
    pattern = (ps[0].value[0] > 0 ? 1 : 0) | (ps[0].value[1] > 0 ? 2 : 0);
    return 3.0 * (std::max(ps[0].value[0], 0.0) + std::max(ps[0].value[1], 0.0));
  };
  ps[0].grad = BasicTensor<double>({2}, {3.0, 3.0});
  GradCheckOptions opts;
  opts.step = 1e-3;
  auto plain = grad_check<double>(loss, testing::ptrs(ps), opts);
  CHECK(plain.max_rel_error > 0.1);
  opts.signature = [&] { return pattern; };
  auto aware = grad_check<double>(loss, testing::ptrs(ps), opts);
  CHECK(aware.coords_skipped == 1);
  CHECK(aware.coords_checked == 1);
  CHECK(aware.max_rel_error < 1e-9);
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(1, "init"), b(1, "init"), c(1, "dropout"), d(2, "init");
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(va != d.next_u64());

  Rng e(5, "shuffle", 3);
  for (int i = 0; i < 7; ++i) e.next_u64();
  auto restored = Rng::restore(e.state());
  CHECK(restored.next_u64() == e.next_u64());

  Rng u(9, "u");
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(7) < 7);
  }
}

}  // TEST_SUITE

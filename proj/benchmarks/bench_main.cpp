#include <benchmark/benchmark.h>

#include <vector>

#include "ufnd/cost.hpp"
#include "ufnd/model.hpp"
#include "ufnd/ops.hpp"
#include "ufnd/optim.hpp"

using namespace ufnd;

namespace {

BasicTensor<float> random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  BasicTensor<float> t({r, c});
  for (auto& v : t.storage()) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
  return t;
}

std::vector<EncodedSample> random_batch(std::size_t n, std::size_t len, std::size_t vocab, Rng& rng) {
  std::vector<EncodedSample> out(n);
  for (auto& s : out) {
    s.ids.assign(len, Vocabulary::pad_id);
    s.mask.assign(len, 1);
    s.ids[0] = Vocabulary::cls_id;
    for (std::size_t i = 1; i < len; ++i) s.ids[i] = static_cast<std::int32_t>(3 + rng.below(vocab - 3));
    s.true_length = len;
    s.label = static_cast<int>(rng.below(2));
  }
  return out;
}

ModelConfig bench_config(std::size_t seq_len) {
  auto cfg = ModelConfig::desk();
  cfg.encoder.vocab_size = 2000;
  cfg.encoder.n_blocks_total = 2;
  cfg.encoder.max_seq_len = seq_len;
  cfg.freeze_encoder = false;
  return cfg;
}

}  // namespace

static void BM_Matmul(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  Rng rng(1, "bench");
  auto a = random_matrix(n, n, rng);
  auto b = random_matrix(n, n, rng);
  for (auto _ : st) benchmark::DoNotOptimize(matmul(a, b));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

// Forward over a batch of 8 at the two preprocessing lengths.
static void BM_ModelForward(benchmark::State& st) {
  const auto len = static_cast<std::size_t>(st.range(0));
  const auto cfg = bench_config(len);
  Model<float> model(cfg, 3);
  Rng rng(2, "bench");
  auto samples = random_batch(8, len, cfg.encoder.vocab_size, rng);
  SampleBatch batch;
  for (const auto& s : samples) batch.push_back(&s);
  for (auto _ : st) benchmark::DoNotOptimize(model.forward(batch, Mode::eval, rng, false));
}
BENCHMARK(BM_ModelForward)->Arg(120)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& st) {
  const auto len = static_cast<std::size_t>(st.range(0));
  const auto cfg = bench_config(len);
  Model<float> model(cfg, 3);
  Adam<float> adam(model.trainable_parameters(), AdamConfig{});
  Rng rng(2, "bench");
  auto samples = random_batch(8, len, cfg.encoder.vocab_size, rng);
  SampleBatch batch;
  std::vector<int> y;
  for (const auto& s : samples) {
    batch.push_back(&s);
    y.push_back(s.label);
  }
  for (auto _ : st) {
    model.zero_grad();
    auto lp = model.forward(batch, Mode::train, rng, true);
    auto nll = nll_loss(lp, std::span<const int>(y));
    model.backward(nll.grad);
    clip_global_norm(adam.params(), 1.0);
    adam.step();
  }
}
BENCHMARK(BM_TrainStep)->Arg(120)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_EstimateCost(benchmark::State& st) {
  const auto cfg = ModelConfig::desk();
  for (auto _ : st) benchmark::DoNotOptimize(estimate_cost(cfg.encoder, cfg.head, 200, 32));
}
BENCHMARK(BM_EstimateCost);
BENCHMARK_MAIN();

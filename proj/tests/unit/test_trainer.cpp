#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "helpers.hpp"
#include "ufnd/checkpoint.hpp"
#include "ufnd/classifier.hpp"
#include "ufnd/trainer.hpp"

using namespace ufnd;

namespace {

std::vector<std::size_t> sizes(const std::vector<std::vector<std::size_t>>& batches) {
  std::vector<std::size_t> out;
  for (const auto& b : batches) out.push_back(b.size());
  return out;
}

Parameter<float>* find_param(Model<float>& m, const std::string& name) {
  for (auto* p : m.parameters())
    if (p->name == name) return p;
  return nullptr;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("batch_iterator partition arithmetic") {
  CHECK(sizes(batch_iterator(10, 4, 0, 1)) == std::vector<std::size_t>{4, 4, 2});
  CHECK(sizes(batch_iterator(9, 4, 0, 1)) == std::vector<std::size_t>{4, 5});
  CHECK(sizes(batch_iterator(8, 4, 0, 1)) == std::vector<std::size_t>{4, 4});
  CHECK(sizes(batch_iterator(3, 16, 0, 1)) == std::vector<std::size_t>{3});
}

TEST_CASE("batch_iterator covers every index once and is keyed by seed and epoch") {
  for (std::size_t n : {1u, 2u, 17u, 100u}) {
    for (std::size_t bs : {2u, 3u, 16u}) {
      auto b = batch_iterator(n, bs, 2, 5);
      std::multiset<std::size_t> seen;
      for (const auto& batch : b) seen.insert(batch.begin(), batch.end());
      CHECK(seen.size() == n);
      for (std::size_t i = 0; i < n; ++i) CHECK(seen.count(i) == 1);
    }
  }
  CHECK(batch_iterator(50, 8, 3, 9) == batch_iterator(50, 8, 3, 9));
  CHECK(batch_iterator(50, 8, 3, 9) != batch_iterator(50, 8, 4, 9));
  CHECK(batch_iterator(50, 8, 3, 9) != batch_iterator(50, 8, 3, 10));
}

TEST_CASE("train config defaults and validation") {
  TrainConfig t;
  CHECK(t.lr == 0.003);
  CHECK(t.clip == 1.0);
  CHECK(t.epochs == 50);
  CHECK(t.dropout_rate == 0.1);
  CHECK(t.best_policy == BestPolicy::rollback);
  CHECK(table_batch_sizes() == std::vector<std::size_t>{16, 32, 64, 128, 256, 512, 1024});
  t.batch_size = 1;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = TrainConfig{};
  t.lr = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = TrainConfig{};
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  CHECK(parse_best_policy(to_string(BestPolicy::select)) == BestPolicy::select);
  CHECK_THROWS(parse_best_policy("sometimes"));
}

TEST_CASE("a separable marker task is learned") {
  // Every fake document carries markers and no real one does.
  auto d = testing::make_toy(80, 1.0, 0.0, 3);
  REQUIRE(d.train.size() == 64);
  REQUIRE(d.val.size() == 16);
  Model<float> model(testing::toy_model(d.vocab.size()), 1);
  auto r = train(model, d.train, d.val, testing::toy_train(20, 4));
  CHECK(r.report.epochs.size() == 20);
  CHECK(r.report.best_val_accuracy >= 0.95);
}

TEST_CASE("report records, rollback and clipping contracts") {
  auto d = testing::make_toy(60, 0.9, 0.1, 4);
  Model<float> model(testing::toy_model(d.vocab.size()), 2);
  auto cfg = testing::toy_train(6, 8);
  auto r = train(model, d.train, d.val, cfg, {.dataset = "toy"});
  const auto& rep = r.report;
  REQUIRE(rep.epochs.size() == 6);
  double best = -1.0;
  for (const auto& e : rep.epochs) {
    best = std::max(best, e.val.accuracy);
    CHECK(e.steps.size() == batch_iterator(d.train.size(), cfg.batch_size, e.epoch, cfg.seed).size());
    for (const auto& s : e.steps) {
      if (s.pre_clip_norm > cfg.clip) {
        CHECK(s.post_clip_norm <= cfg.clip * (1 + 1e-6));
      } else {
        CHECK(s.post_clip_norm == doctest::Approx(s.pre_clip_norm));
      }
      CHECK(std::isfinite(s.loss));
    }
    CHECK(e.rolled_back == !e.improved);
  }
  CHECK(rep.best_val_accuracy == best);
  CHECK(rep.epochs[rep.best_epoch - 1].val.accuracy == best);
  CHECK(r.best.best_val_accuracy == best);
  CHECK(rep.metadata.at("best_policy") == "rollback");
  CHECK(rep.metadata.at("gelu") == "erf");
  CHECK(rep.metadata.count("config_hash") == 1);
  CHECK(rep.metadata.count("tokenizer") == 1);

  // The returned best checkpoint evaluates to the recorded best accuracy.
  Model<float> fresh(testing::toy_model(d.vocab.size()), 99);
  restore_state(fresh, nullptr, r.best);
  CHECK(evaluate(fresh, d.val).accuracy == best);

  CHECK(TrainReport::summary_header() == "dataset,batch_size,best_epoch,accuracy,precision,recall,f1");
  CHECK(rep.summary_row().rfind("toy,8,", 0) == 0);
}

TEST_CASE("one epoch gives one record and best epoch 1") {
  auto d = testing::make_toy(20, 0.9, 0.1, 5);
  Model<float> model(testing::toy_model(d.vocab.size()), 3);
  auto r = train(model, d.train, d.val, testing::toy_train(1, 4));
  CHECK(r.report.epochs.size() == 1);
  CHECK(r.report.best_epoch == 1);
}

TEST_CASE("identical runs give identical traces and checkpoints") {
  auto d = testing::make_toy(40, 0.9, 0.1, 6);
  auto run = [&](std::uint64_t seed) {
    auto cfg = testing::toy_train(3, 8);
    cfg.seed = seed;
    Model<float> model(testing::toy_model(d.vocab.size()), seed);
    return train(model, d.train, d.val, cfg);
  };
  auto a = run(1), b = run(1), c = run(2);
  CHECK(a.report.loss_trace() == b.report.loss_trace());
  CHECK(a.report.to_text() == b.report.to_text());
  CHECK(serialize_checkpoint(a.best) == serialize_checkpoint(b.best));
  CHECK(serialize_checkpoint(a.last) == serialize_checkpoint(b.last));
  CHECK(a.report.loss_trace() != c.report.loss_trace());
}

TEST_CASE("resume continues the uninterrupted run exactly") {
  auto d = testing::make_toy(40, 0.9, 0.1, 7);
  for (auto policy : {BestPolicy::rollback, BestPolicy::select}) {
    auto cfg = testing::toy_train(5, 8);
    cfg.best_policy = policy;
    Model<float> full_model(testing::toy_model(d.vocab.size()), 4);
    auto full = train(full_model, d.train, d.val, cfg);

    Model<float> part_model(testing::toy_model(d.vocab.size()), 4);
    auto part = train(part_model, d.train, d.val, cfg, {.stop_after = 2});
    REQUIRE(part.report.epochs.size() == 2);
    if (policy == BestPolicy::select && part.last.epoch != part.last.best_epoch) {
      // Select mode can only resume from its best epoch.
      Model<float> m(testing::toy_model(d.vocab.size()), 4);
      CHECK_THROWS(train(m, d.train, d.val, cfg, {.resume = &part.last}));
      continue;
    }

    testing::TempDir dir("resume");
    save_checkpoint(part.last, dir.file("last.ckpt"));
    auto loaded = load_checkpoint(dir.file("last.ckpt"));
    Model<float> resumed_model(testing::toy_model(d.vocab.size()), 77);
    auto rest = train(resumed_model, d.train, d.val, cfg, {.resume = &loaded});

    auto trace = part.report.loss_trace();
    const auto tail = rest.report.loss_trace();
    trace.insert(trace.end(), tail.begin(), tail.end());
    CHECK(trace == full.report.loss_trace());
    CHECK(serialize_checkpoint(rest.last) == serialize_checkpoint(full.last));
    // The dropout stream position at the best epoch is not kept in the last
    // checkpoint, so only the model and optimizer state are compared.
    CHECK(rest.best.tensors == full.best.tensors);
    CHECK(rest.best.adam_step == full.best.adam_step);
    CHECK(rest.best.epoch == full.best.epoch);
    CHECK(rest.best.best_val_accuracy == full.best.best_val_accuracy);
  }
}

TEST_CASE("resume refuses a different configuration") {
  auto d = testing::make_toy(20, 0.9, 0.1, 8);
  auto cfg = testing::toy_train(2, 4);
  Model<float> m(testing::toy_model(d.vocab.size()), 1);
  auto r = train(m, d.train, d.val, cfg);
  auto other = cfg;
  other.lr = 0.001;
  Model<float> m2(testing::toy_model(d.vocab.size()), 1);
  CHECK_THROWS(train(m2, d.train, d.val, other, {.resume = &r.last}));
}

TEST_CASE("frozen encoders are not updated") {
  auto d = testing::make_toy(20, 0.9, 0.1, 9);
  auto mc = testing::toy_model(d.vocab.size());
  mc.freeze_encoder = true;
  auto cfg = testing::toy_train(2, 4);
  cfg.freeze_encoder = true;
  Model<float> m(mc, 1);
  const Tensor before = m.encoder().token_embedding().value;
  const Tensor head_before = find_param(m, "head.l1.weight")->value;
  auto r = train(m, d.train, d.val, cfg);
  Model<float> after(mc, 5);
  restore_state(after, nullptr, r.last);
  CHECK(after.encoder().token_embedding().value == before);
  CHECK(find_param(after, "head.l1.weight")->value != head_before);
}

TEST_CASE("checked mode stops on a non-finite weight") {
  auto d = testing::make_toy(20, 0.9, 0.1, 10);
  auto cfg = testing::toy_train(1, 4);
  cfg.checked = true;
  Model<float> m(testing::toy_model(d.vocab.size()), 1);
  find_param(m, "head.l3.weight")->value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(m, d.train, d.val, cfg);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("head.") != std::string::npos);
  }
}

TEST_CASE("empty validation set is rejected") {
  auto d = testing::make_toy(20, 0.9, 0.1, 11);
  EncodedSet empty;
  Model<float> m(testing::toy_model(d.vocab.size()), 1);
  CHECK_THROWS_AS(train(m, d.train, empty, testing::toy_train(1, 4)), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(m, empty), std::invalid_argument);
}

TEST_CASE("evaluate with a model hard-wired to class 1") {
  auto d = testing::make_toy(20, 0.9, 0.1, 12);
  Model<float> m(testing::toy_model(d.vocab.size()), 1);
  find_param(m, "head.l3.weight")->value.zero();
  auto* bias = find_param(m, "head.l3.bias");
  bias->value[0] = -10.0f;
  bias->value[1] = 10.0f;
  EncodedSet fakes = d.val;
  for (auto& s : fakes.samples) s.label = 1;
  auto metrics = evaluate(m, fakes);
  CHECK(metrics.accuracy == 1.0);
  CHECK(metrics.recall == 1.0);
}

TEST_CASE("evaluate is deterministic and matches an independent tally") {
  auto d = testing::make_toy(60, 0.9, 0.1, 13);
  Model<float> m(testing::toy_model(d.vocab.size()), 6);
  train(m, d.train, d.val, testing::toy_train(2, 8));
  auto a = evaluate_detailed(m, d.val);
  auto b = evaluate_detailed(m, d.val, 7);
  CHECK(a.metrics == b.metrics);
  CHECK(a.predictions == b.predictions);

  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < d.val.size(); ++i) {
    const int p = a.predictions[i], t = d.val.samples[i].label;
    correct += p == t;
    tp += p == 1 && t == 1;
    fp += p == 1 && t == 0;
    fn += p == 0 && t == 1;
  }
  CHECK(a.metrics.accuracy == doctest::Approx(double(correct) / d.val.size()).epsilon(1e-15));
  CHECK(a.confusion.tp == tp);
  CHECK(a.confusion.fp == fp);
  CHECK(a.confusion.fn == fn);
}

}  // TEST_SUITE

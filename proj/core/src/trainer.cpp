#include "ufnd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ufnd/kv_config.hpp"
#include "ufnd/ops.hpp"
#include "ufnd/optim.hpp"

namespace ufnd {

std::vector<std::vector<std::size_t>> batch_iterator(std::size_t n, std::size_t batch_size,
                                                     std::size_t epoch, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("batch_iterator: empty corpus");
  if (batch_size == 0) throw std::invalid_argument("batch_iterator: batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, "shuffle", epoch);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += batch_size) {
    const std::size_t end = std::min(n, at + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

std::string config_hash(const ModelConfig& model, const TrainConfig& train) {
  KvConfig kv;
  write_config(kv, model);
  write_config(kv, train);
  // The epoch budget may grow on resume.
  kv.erase("train.epochs");
  return kv.hash_hex();
}

std::string TrainReport::to_text() const {
  std::ostringstream os;
  os << "# ufnd train report\n";
  os << "dataset=" << dataset << '\n';
  for (const auto& [k, v] : metadata) os << k << '=' << v << '\n';
  for (const auto& e : epochs) {
    double max_norm = 0.0;
    std::size_t clipped = 0;
    for (const auto& s : e.steps) {
      max_norm = std::max(max_norm, s.pre_clip_norm);
      if (s.pre_clip_norm != s.post_clip_norm) ++clipped;
    }
    os << "epoch=" << e.epoch << " train_loss=" << format_double(e.train_loss)
       << " val_accuracy=" << format_double(e.val.accuracy)
       << " val_precision=" << format_double(e.val.precision)
       << " val_recall=" << format_double(e.val.recall) << " val_f1=" << format_double(e.val.f1)
       << " steps=" << e.steps.size() << " clipped_steps=" << clipped
       << " max_pre_clip_norm=" << format_double(max_norm) << " improved=" << (e.improved ? 1 : 0)
       << " rolled_back=" << (e.rolled_back ? 1 : 0) << '\n';
  }
  os << "best_epoch=" << best_epoch << '\n';
  os << "best_val_accuracy=" << format_double(best_val_accuracy) << '\n';
  return os.str();
}

std::string TrainReport::summary_header() {
  return "dataset,batch_size,best_epoch,accuracy,precision,recall,f1";
}

std::string TrainReport::summary_row() const {
  std::ostringstream os;
  auto it = metadata.find("batch_size");
  os << dataset << ',' << (it == metadata.end() ? "" : it->second) << ',' << best_epoch << ','
     << format_double(best_val.accuracy) << ',' << format_double(best_val.precision) << ','
     << format_double(best_val.recall) << ',' << format_double(best_val.f1);
  return os.str();
}

std::vector<double> TrainReport::loss_trace() const {
  std::vector<double> out;
  for (const auto& e : epochs) {
    for (const auto& s : e.steps) out.push_back(s.loss);
  }
  return out;
}

namespace {

SampleBatch gather(const EncodedSet& set, const std::vector<std::size_t>& idx) {
  SampleBatch b;
  b.reserve(idx.size());
  for (auto i : idx) b.push_back(&set.samples[i]);
  return b;
}

std::vector<int> labels_of(const SampleBatch& b) {
  std::vector<int> y;
  y.reserve(b.size());
  for (const auto* s : b) y.push_back(s->label);
  return y;
}

void require_finite(const std::vector<Parameter<float>*>& params, bool grads, std::size_t epoch,
                    std::size_t step) {
  for (const auto* p : params) {
    const auto& t = grads ? p->grad : p->value;
    if (!t.all_finite()) {
      throw NonFiniteError(std::string("non-finite ") + (grads ? "gradient" : "value") + " in '" +
                           p->name + "' at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step));
    }
  }
}

}  // namespace

TrainResult train(Model<float>& model, const EncodedSet& train_set, const EncodedSet& val_set,
                  const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (val_set.empty()) throw std::invalid_argument("train: validation set is empty");
  if (train_set.size() < 2) throw std::invalid_argument("train: need at least 2 training samples");
  if (apply_train_config(model.config(), cfg) != model.config()) {
    throw std::invalid_argument(
        "train: model dropout, freeze or max_seq_len disagree with the train config");
  }
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  const std::string hash = config_hash(model.config(), cfg);
  auto trainable = model.trainable_parameters();
  Adam<float> adam(trainable, cfg.adam());
  Rng dropout_rng(cfg.seed, "dropout");

  TrainResult result;
  auto& report = result.report;
  report.dataset = opts.dataset;
  report.metadata = {
      {"batch_size", std::to_string(cfg.batch_size)},
      {"best_policy", to_string(cfg.best_policy)},
      {"config_hash", hash},
      {"freeze_encoder", model.config().freeze_encoder ? "on" : "off"},
      {"gelu", std::string(gelu_variant)},
      {"loss", "nll(log_softmax), batch mean"},
      {"positive_class", "1 (fake)"},
      {"rng", std::string(Rng::algorithm)},
      {"seed", std::to_string(cfg.seed)},
      {"tokenizer", "whitespace+nonalnum, lowercase (not WordPiece)"},
      {"train_samples", std::to_string(train_set.size())},
      {"val_samples", std::to_string(val_set.size())},
      {"warning", "validation split is also the reporting split"},
  };

  auto stamp = [&](Checkpoint& c, std::size_t epoch, std::size_t best_epoch, double best_acc) {
    c.model = model.config();
    c.train = cfg;
    c.vocab_hash = opts.vocab_hash;
    c.config_hash = hash;
    c.epoch = epoch;
    c.best_epoch = best_epoch;
    c.best_val_accuracy = best_acc;
    c.dropout_rng = dropout_rng.state();
  };

  std::size_t start = 0;
  std::size_t best_epoch = 0;
  double best_acc = -1.0;
  Checkpoint best;
  if (opts.resume) {
    const auto& r = *opts.resume;
    if (r.config_hash != hash) {
      throw CheckpointError("resume checkpoint config hash " + r.config_hash +
                            " does not match run config " + hash);
    }
    restore_state(model, &adam, r);
    dropout_rng = Rng::restore(r.dropout_rng);
    start = r.epoch;
    best_epoch = r.best_epoch;
    best_acc = r.best_val_accuracy;
    if (cfg.best_policy == BestPolicy::select && r.epoch != r.best_epoch) {
      throw CheckpointError("select-policy resume needs a checkpoint taken at the best epoch");
    }
    // At an epoch boundary the rollback policy leaves the weights equal to the best ones.
    best = r;
    best.epoch = best_epoch;
  }

  const std::size_t end = opts.stop_after ? std::min(opts.stop_after, cfg.epochs) : cfg.epochs;
  for (std::size_t epoch = start + 1; epoch <= end; ++epoch) {
    const auto t_epoch = clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    const auto batches = batch_iterator(train_set.size(), cfg.batch_size, epoch, cfg.seed);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto batch = gather(train_set, batches[b]);
      const auto targets = labels_of(batch);
      model.zero_grad();
      auto log_probs = model.forward(batch, Mode::train, dropout_rng, true);
      auto nll = nll_loss(log_probs, std::span<const int>(targets));
      if (cfg.checked && !std::isfinite(nll.loss)) {
        require_finite(model.parameters(), false, epoch, b + 1);
        throw NonFiniteError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                             std::to_string(b + 1));
      }
      model.backward(nll.grad);
      if (cfg.checked) require_finite(trainable, true, epoch, b + 1);
      StepRecord step;
      step.loss = nll.loss;
      step.batch_size = batch.size();
      step.pre_clip_norm = clip_global_norm(adam.params(), cfg.clip);
      step.post_clip_norm = global_grad_norm(adam.params());
      adam.step();
      if (cfg.checked) require_finite(trainable, false, epoch, b + 1);
      rec.steps.push_back(step);
    }
    double sum = 0.0;
    for (const auto& s : rec.steps) sum += s.loss;
    rec.train_loss = sum / static_cast<double>(rec.steps.size());
    rec.val = evaluate(model, val_set);

    if (rec.val.accuracy > best_acc) {
      rec.improved = true;
      best_acc = rec.val.accuracy;
      best_epoch = epoch;
      best = capture_state(model, &adam);
      stamp(best, epoch, best_epoch, best_acc);
    } else if (cfg.best_policy == BestPolicy::rollback) {
      restore_state(model, &adam, best);
      rec.rolled_back = true;
    }
    result.last = capture_state(model, &adam);
    stamp(result.last, epoch, best_epoch, best_acc);

    rec.seconds = std::chrono::duration<double>(clock::now() - t_epoch).count();
    if (opts.on_epoch) opts.on_epoch(rec);
    report.epochs.push_back(std::move(rec));
  }

  report.best_epoch = best_epoch;
  report.best_val_accuracy = best_acc;
  for (const auto& e : report.epochs) {
    if (e.epoch == best_epoch) report.best_val = e.val;
  }
  report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  result.best = std::move(best);
  return result;
}

Evaluation evaluate_detailed(Model<float>& model, const EncodedSet& set, std::size_t batch_size) {
  if (set.empty()) throw std::invalid_argument("evaluate: empty corpus");
  Evaluation ev;
  ev.predictions.reserve(set.size());
  std::vector<int> targets;
  targets.reserve(set.size());
  Rng unused(0, "eval");
  double loss_sum = 0.0;
  for (std::size_t at = 0; at < set.size(); at += batch_size) {
    SampleBatch batch;
    for (std::size_t i = at; i < std::min(set.size(), at + batch_size); ++i) {
      batch.push_back(&set.samples[i]);
    }
    const auto y = labels_of(batch);
    auto log_probs = model.forward(batch, Mode::eval, unused, false);
    const auto pred = predict(log_probs);
    ev.predictions.insert(ev.predictions.end(), pred.begin(), pred.end());
    targets.insert(targets.end(), y.begin(), y.end());
    loss_sum += nll_loss(log_probs, std::span<const int>(y)).loss * static_cast<double>(y.size());
  }
  ev.mean_loss = loss_sum / static_cast<double>(set.size());
  ev.confusion = confusion(ev.predictions, targets);
  ev.metrics = compute_metrics(ev.confusion);
  return ev;
}

Metrics evaluate(Model<float>& model, const EncodedSet& set) {
  return evaluate_detailed(model, set).metrics;
}

}  // namespace ufnd

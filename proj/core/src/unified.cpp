#include "ufnd/unified.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ufnd/cost.hpp"
#include "ufnd/delimited.hpp"
#include "ufnd/kv_config.hpp"

namespace ufnd {

bool check_acceptable(double accuracy, double baseline, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be > 0");
  auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!unit(accuracy) || !unit(baseline) || !unit(threshold)) {
    throw std::invalid_argument("accuracy, baseline and threshold must lie in (0, 1]");
  }
  return baseline - accuracy <= threshold;
}

BaselineTable::BaselineTable(std::vector<BaselineEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!(e.accuracy > 0.0 && e.accuracy <= 1.0)) {
      throw std::invalid_argument("baseline for '" + e.dataset + "' must lie in (0, 1]");
    }
  }
}

BaselineTable BaselineTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open baseline file: " + path);
  DelimitedReader reader(in, ',');
  std::vector<std::string> row;
  if (!reader.next(row)) throw std::runtime_error("baseline file is empty: " + path);
  if (row.size() < 2 || row[0] != "dataset" || row[1] != "accuracy") {
    throw std::runtime_error("baseline file " + path + " must start with header dataset,accuracy,source");
  }
  std::vector<BaselineEntry> entries;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 2) throw std::runtime_error("short row in baseline file " + path);
    BaselineEntry e;
    e.dataset = row[0];
    try {
      e.accuracy = std::stod(row[1]);
    } catch (const std::exception&) {
      throw std::runtime_error("bad accuracy '" + row[1] + "' in baseline file " + path);
    }
    if (row.size() > 2) e.source = row[2];
    entries.push_back(std::move(e));
  }
  return BaselineTable(std::move(entries));
}

BaselineTable BaselineTable::uniform(const std::vector<std::string>& datasets, double accuracy,
                                     const std::string& source) {
  std::vector<BaselineEntry> entries;
  for (const auto& d : datasets) entries.push_back({d, accuracy, source});
  return BaselineTable(std::move(entries));
}

double BaselineTable::at(const std::string& dataset) const {
  for (const auto& e : entries_) {
    if (e.dataset == dataset) return e.accuracy;
  }
  throw std::out_of_range("no baseline for dataset '" + dataset + "'");
}

std::string BaselineTable::to_delimited() const {
  std::string out = "dataset,accuracy,source\n";
  for (const auto& e : entries_) {
    out += join_record({e.dataset, format_double(e.accuracy), e.source}) + "\n";
  }
  return out;
}

PreparedData prepare(std::span<const SplitCorpus> splits, const std::vector<std::string>& names,
                     const PrepConfig& prep, std::size_t vocab_limit, std::size_t min_freq) {
  if (splits.empty()) throw std::invalid_argument("prepare: no datasets");
  if (names.size() != splits.size()) throw std::invalid_argument("prepare: one name per dataset");
  prep.validate();
  PreparedData out;
  out.prep = prep;

  std::vector<Corpus> trains;
  for (const auto& s : splits) trains.push_back(s.train);
  const Corpus all_train = combine(trains, "vocab-source");
  out.vocab = build_vocab(all_train, prep, vocab_limit, min_freq);

  for (std::size_t i = 0; i < splits.size(); ++i) {
    PreparedDataset d;
    d.name = names[i];
    d.train = encode_corpus(splits[i].train, out.vocab, prep);
    d.test = encode_corpus(splits[i].test, out.vocab, prep);
    d.train.name = names[i] + ".train";
    d.test.name = names[i] + ".test";
    out.datasets.push_back(std::move(d));
  }
  const auto joint = combine_splits(splits, "combined");
  out.combined.name = "combined";
  out.combined.train = encode_corpus(joint.train, out.vocab, prep);
  out.combined.test = encode_corpus(joint.test, out.vocab, prep);
  return out;
}

TrainConfig resolve_train_config(TrainConfig cfg, const PrepConfig& prep, std::size_t batch_size) {
  cfg.max_seq_len = prep.max_seq_len;
  cfg.preprocessing_enabled = prep.remove_short;
  cfg.batch_size = batch_size;
  return cfg;
}

ModelConfig resolve_model_config(const ModelConfig& base, const TrainConfig& cfg,
                                 std::size_t vocab_size) {
  if (vocab_size > base.encoder.vocab_size) {
    throw std::invalid_argument("vocabulary of " + std::to_string(vocab_size) +
                                " tokens exceeds the model's vocab_size " +
                                std::to_string(base.encoder.vocab_size));
  }
  auto m = apply_train_config(base, cfg);
  m.head.d_in = m.encoder.d_model;
  return m;
}

namespace {

struct CellRun {
  Metrics val;
  std::size_t best_epoch = 0;
  Checkpoint best;
};

CellRun run_cell(const PreparedDataset& d, const ModelConfig& base, const TrainConfig& tc,
                 std::size_t vocab_size, std::uint64_t vocab_hash) {
  const auto mc = resolve_model_config(base, tc, vocab_size);
  Model<float> model(mc, tc.seed);
  TrainOptions opts;
  opts.dataset = d.name;
  opts.vocab_hash = vocab_hash;
  auto r = train(model, d.train, d.test, tc, opts);
  return {r.report.best_val, r.report.best_epoch, std::move(r.best)};
}

}  // namespace

PhaseOneResult phase_one(const PreparedData& data, const ModelConfig& base,
                         const std::vector<TrainConfig>& grid,
                         const std::vector<std::size_t>& batch_sizes,
                         const BaselineTable& baselines, double threshold) {
  if (grid.empty()) throw std::invalid_argument("phase_one: empty config grid");
  if (batch_sizes.empty()) throw std::invalid_argument("phase_one: no batch sizes");
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be > 0");

  PhaseOneResult result;
  result.threshold = threshold;
  for (const auto& d : data.datasets) result.datasets.push_back(d.name);
  result.min_deficits.assign(data.datasets.size(), std::numeric_limits<double>::infinity());

  std::vector<std::vector<Checkpoint>> kept(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    PhaseOneCandidate cand;
    cand.index = g;
    double acc_sum = 0.0;
    bool feasible = true;
    for (std::size_t di = 0; di < data.datasets.size(); ++di) {
      const auto& d = data.datasets[di];
      PhaseOneChoice choice;
      choice.dataset = d.name;
      Checkpoint chosen;
      bool have = false;
      for (auto bs : batch_sizes) {
        const auto tc = resolve_train_config(grid[g], data.prep, bs);
        auto cell = run_cell(d, base, tc, data.vocab.size(), data.vocab.hash());
        result.cells.push_back({g, d.name, bs, cell.val, cell.best_epoch});
        // Ties keep the earlier batch size.
        if (!have || cell.val.accuracy > choice.val.accuracy) {
          have = true;
          choice.batch_size = bs;
          choice.val = cell.val;
          chosen = std::move(cell.best);
        }
      }
      choice.baseline = baselines.at(d.name);
      choice.deficit = choice.baseline - choice.val.accuracy;
      choice.acceptable = choice.val.accuracy > 0.0 &&
                          check_acceptable(choice.val.accuracy, choice.baseline, threshold);
      feasible = feasible && choice.acceptable;
      result.min_deficits[di] = std::min(result.min_deficits[di], choice.deficit);
      acc_sum += choice.val.accuracy;

      const auto tc = resolve_train_config(grid[g], data.prep, choice.batch_size);
      const auto mc = resolve_model_config(base, tc, data.vocab.size());
      cand.cost += estimate_cost(mc.encoder, mc.head, tc.max_seq_len, choice.batch_size).total;
      cand.choices.push_back(std::move(choice));
      kept[g].push_back(std::move(chosen));
    }
    cand.feasible = feasible;
    cand.mean_accuracy = acc_sum / static_cast<double>(data.datasets.size());
    result.candidates.push_back(std::move(cand));
  }

  // Highest mean accuracy, then lower cost, then grid order.
  for (const auto& c : result.candidates) {
    if (!c.feasible) continue;
    if (!result.accepted) {
      result.accepted = true;
      result.selected = c.index;
      continue;
    }
    const auto& s = result.candidates[result.selected];
    if (c.mean_accuracy > s.mean_accuracy ||
        (c.mean_accuracy == s.mean_accuracy && c.cost < s.cost)) {
      result.selected = c.index;
    }
  }
  result.shared = resolve_train_config(grid[result.selected], data.prep, grid[result.selected].batch_size);
  result.checkpoints = std::move(kept[result.selected]);
  return result;
}

std::string PhaseOneResult::to_text() const {
  std::ostringstream os;
  os << "# ufnd phase one\n";
  os << "threshold=" << format_double(threshold) << '\n';
  os << "accepted=" << (accepted ? "yes" : "no") << '\n';
  if (accepted) {
    os << "selected_config=" << selected << '\n';
  } else {
    os << "infeasible: no shared config keeps every deficit within the threshold\n";
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    os << "min_deficit." << datasets[i] << '=' << format_double(min_deficits[i]) << '\n';
  }
  for (const auto& c : candidates) {
    os << "config=" << c.index << " feasible=" << (c.feasible ? 1 : 0)
       << " mean_accuracy=" << format_double(c.mean_accuracy) << " cost=" << format_double(c.cost)
       << '\n';
    for (const auto& ch : c.choices) {
      os << "  dataset=" << ch.dataset << " batch_size=" << ch.batch_size
         << " accuracy=" << format_double(ch.val.accuracy)
         << " baseline=" << format_double(ch.baseline) << " deficit=" << format_double(ch.deficit)
         << " acceptable=" << (ch.acceptable ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

Table table_one(const PhaseOneResult& result, std::size_t candidate, const std::string& dataset) {
  Table t;
  t.title = dataset.empty() ? "Per-dataset metrics by batch size"
                            : "Metrics by batch size: " + dataset;
  t.notes = {kPositiveClassNote, "config=" + std::to_string(candidate)};
  t.header = {"batch_size"};
  std::vector<std::string> names;
  for (const auto& d : result.datasets) {
    if (dataset.empty() || d == dataset) names.push_back(d);
  }
  if (names.empty()) throw std::invalid_argument("unknown dataset '" + dataset + "'");
  const bool wide = names.size() > 1;
  for (const auto& n : names) {
    for (const char* m : {"accuracy", "precision", "recall", "f1"}) {
      t.header.push_back(wide ? n + "." + m : std::string(m));
    }
  }
  std::vector<std::size_t> sizes;
  for (const auto& c : result.cells) {
    if (c.config_index != candidate) continue;
    if (std::find(sizes.begin(), sizes.end(), c.batch_size) == sizes.end()) sizes.push_back(c.batch_size);
  }
  for (auto bs : sizes) {
    std::vector<std::string> row{std::to_string(bs)};
    for (const auto& n : names) {
      for (const auto& c : result.cells) {
        if (c.config_index == candidate && c.dataset == n && c.batch_size == bs) {
          row.push_back(fixed(c.val.accuracy, 4));
          row.push_back(fixed(c.val.precision, 4));
          row.push_back(fixed(c.val.recall, 4));
          row.push_back(fixed(c.val.f1, 4));
        }
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

std::size_t encoder_source_index(const PhaseOneResult& result) {
  if (result.checkpoints.empty()) throw std::invalid_argument("phase one kept no checkpoints");
  const auto& choices = result.candidates.at(result.selected).choices;
  std::size_t best = 0;
  for (std::size_t i = 1; i < choices.size(); ++i) {
    if (choices[i].val.accuracy > choices[best].val.accuracy) best = i;
  }
  return best;
}

namespace {

void load_encoder(Model<float>& model, const Checkpoint& ckpt) {
  for (auto* p : model.encoder().parameters()) {
    const auto* src = ckpt.find(p->name);
    if (!src || src->tensor.shape() != p->value.shape()) {
      throw CheckpointError("phase-1 checkpoint lacks a compatible '" + p->name + "'");
    }
    p->value = src->tensor;
  }
}

std::vector<NamedTensor> head_snapshot(Model<float>& model) {
  std::vector<NamedTensor> out;
  for (auto* p : model.head().parameters()) out.push_back({p->name, p->value});
  return out;
}

}  // namespace

PhaseTwoResult phase_two(const PreparedData& data, const ModelConfig& base, const TrainConfig& shared,
                         std::size_t batch_size, const Checkpoint* encoder_source,
                         const std::string& source_name) {
  const auto tc = resolve_train_config(shared, data.prep, batch_size);
  const auto mc = resolve_model_config(base, tc, data.vocab.size());
  Model<float> model(mc, tc.seed);
  if (encoder_source) load_encoder(model, *encoder_source);
  model.reinit_head(tc.seed, "init.head.phase2");

  PhaseTwoResult out;
  out.batch_size = batch_size;
  out.initial_head = head_snapshot(model);
  out.encoder_source = encoder_source ? source_name : "fresh";
  TrainOptions opts;
  opts.dataset = data.combined.name;
  opts.vocab_hash = data.vocab.hash();
  out.run = train(model, data.combined.train, data.combined.test, tc, opts);
  out.run.report.metadata["encoder_source"] = out.encoder_source;
  return out;
}

std::vector<PhaseTwoResult> phase_two_sweep(const PreparedData& data, const ModelConfig& base,
                                            const TrainConfig& shared,
                                            const std::vector<std::size_t>& batch_sizes,
                                            const Checkpoint* encoder_source,
                                            const std::string& source_name) {
  std::vector<PhaseTwoResult> out;
  for (auto bs : batch_sizes) {
    out.push_back(phase_two(data, base, shared, bs, encoder_source, source_name));
  }
  return out;
}

Table sweep_table(const std::string& title, const std::vector<PhaseTwoResult>& runs) {
  Table t;
  t.title = title;
  t.notes = {kPositiveClassNote};
  t.header = {"batch_size", "accuracy", "precision", "recall", "f1"};
  for (const auto& r : runs) {
    const auto& m = r.run.report.best_val;
    t.add_row({std::to_string(r.batch_size), fixed(m.accuracy, 4), fixed(m.precision, 4),
               fixed(m.recall, 4), fixed(m.f1, 4)});
  }
  return t;
}

std::string PreprocessingComparison::to_text() const {
  std::ostringstream os;
  os << "# ufnd preprocessing comparison\n";
  for (const auto* r : {&without, &with}) {
    const char* tag = r == &without ? "without" : "with";
    os << tag << ".max_seq_len=" << r->prep.max_seq_len << '\n';
    os << tag << ".remove_short=" << (r->prep.remove_short ? "on" : "off") << '\n';
    os << tag << ".mean_true_length=" << format_double(r->mean_true_length) << '\n';
  }
  os << "cost_without=" << format_double(cost_without) << '\n';
  os << "cost_with=" << format_double(cost_with) << '\n';
  os << "cost_ratio=" << format_double(cost_ratio) << '\n';
  return os.str();
}

PreprocessingComparison compare_preprocessing(std::span<const SplitCorpus> splits,
                                              const std::vector<std::string>& names,
                                              const ModelConfig& base, const TrainConfig& shared,
                                              const std::vector<std::size_t>& batch_sizes,
                                              const PrepConfig& without, const PrepConfig& with,
                                              std::size_t vocab_limit) {
  PreprocessingComparison cmp;
  auto run = [&](const PrepConfig& prep, PreprocessingRun& out, const std::string& title) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = prepare(splits, names, prep, vocab_limit);
    out.prep = prep;
    out.mean_true_length = data.combined.train.mean_true_length();
    out.runs = phase_two_sweep(data, base, shared, batch_sizes, nullptr);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.table = sweep_table(title, out.runs);
    out.table.notes.push_back("max_seq_len=" + std::to_string(prep.max_seq_len) +
                              " remove_short=" + (prep.remove_short ? "on" : "off"));
  };
  run(without, cmp.without, "Combined dataset without preprocessing");
  run(with, cmp.with, "Combined dataset with preprocessing");

  const std::size_t bs = batch_sizes.empty() ? shared.batch_size : batch_sizes.front();
  auto cost_at = [&](std::size_t len) {
    auto tc = shared;
    tc.max_seq_len = len;
    const auto mc = apply_train_config(base, tc);
    return estimate_cost(mc.encoder, mc.head, len, bs).total;
  };
  cmp.cost_without = cost_at(without.max_seq_len);
  cmp.cost_with = cost_at(with.max_seq_len);
  cmp.cost_ratio = cmp.cost_without / cmp.cost_with;
  return cmp;
}

std::string AblationRow::label() const {
  return subset_label(subset) + " (" + std::to_string(batch_size) + ")";
}

Table AblationResult::table() const {
  Table t;
  t.title = "Encoder-block ablation";
  t.notes = {kPositiveClassNote, "param_count counts encoder parameters"};
  t.header = {"blocks (batch)", "accuracy", "precision", "recall", "f1", "param_count"};
  for (const auto& r : rows) {
    t.add_row({r.label(), fixed(r.metrics.accuracy, 4), fixed(r.metrics.precision, 4),
               fixed(r.metrics.recall, 4), fixed(r.metrics.f1, 4), std::to_string(r.param_count)});
  }
  return t;
}

AblationResult ablate(const PreparedDataset& combined, const ModelConfig& base,
                      const TrainConfig& shared, const AblationGrid& grid,
                      std::uint64_t vocab_hash) {
  AblationResult result;
  for (const auto& subset : grid.subsets) {
    ModelConfig mc = base;
    mc.encoder = select_blocks(base.encoder, subset);
    for (auto bs : grid.batch_sizes) {
      auto tc = shared;
      tc.batch_size = bs;
      const auto run_cfg = apply_train_config(mc, tc);
      Model<float> model(run_cfg, tc.seed);
      TrainOptions opts;
      opts.dataset = combined.name;
      opts.vocab_hash = vocab_hash;
      auto r = train(model, combined.train, combined.test, tc, opts);
      AblationRow row;
      row.subset = subset;
      row.batch_size = bs;
      row.metrics = r.report.best_val;
      row.param_count = param_count(run_cfg.encoder);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace ufnd

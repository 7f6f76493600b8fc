#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ufnd/checkpoint.hpp"
#include "ufnd/cost.hpp"
#include "ufnd/delimited.hpp"
#include "ufnd/synthetic.hpp"
#include "ufnd/trainer.hpp"
#include "ufnd/unified.hpp"

namespace fs = std::filesystem;

namespace ufnd::cli {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string require_out(const Overrides& o) {
  if (o.out.empty()) throw InputError("--out is required");
  ensure_dir(o.out);
  return o.out;
}

Manifest start_manifest(const std::string& command, const std::vector<std::string>& argv,
                        const Overrides& o) {
  Manifest m(command, argv);
  for (const auto& c : o.configs) m.input(c);
  return m;
}

void record_inputs(const std::vector<LoadedDataset>& sets, Manifest& m) {
  for (const auto& d : sets) {
    for (const auto& p : d.inputs) m.input(p);
  }
}

std::vector<SplitCorpus> splits_of(const std::vector<LoadedDataset>& sets) {
  std::vector<SplitCorpus> out;
  for (const auto& d : sets) out.push_back(d.split);
  return out;
}

std::vector<std::string> names_of(const std::vector<LoadedDataset>& sets) {
  std::vector<std::string> out;
  for (const auto& d : sets) out.push_back(d.name);
  return out;
}

std::size_t vocab_limit(const Resolved& r) {
  const std::size_t cap = r.model.encoder.vocab_size;
  const std::size_t room = cap > Vocabulary::special_count ? cap - Vocabulary::special_count : 0;
  return r.kv.get_size("vocab.max_size", room);
}

PreparedData prepare_from(const Resolved& r, const std::vector<LoadedDataset>& sets) {
  const auto splits = splits_of(sets);
  return prepare(splits, names_of(sets), r.prep, vocab_limit(r), r.kv.get_size("vocab.min_freq", 1));
}

void write_table(const Table& t, const std::string& stem, Manifest& m) {
  for (const auto& p : t.write(stem)) m.output(p);
}

void write_checkpoint(const Checkpoint& c, const std::string& path, Manifest& m) {
  save_checkpoint(c, path);
  m.output(path);
}

void write_config_copy(const Resolved& r, const std::string& out, Manifest& m) {
  write_text(join_path(out, "resolved.cfg"), r.kv.serialize(), m);
  m.set_config(r.kv);
}

}  // namespace

int cmd_synth(const Overrides& o, const SynthArgs& a, const std::vector<std::string>& argv) {
  const auto out = require_out(o);
  Manifest m = start_manifest("synth", argv, o);
  SyntheticSpec spec;
  spec.docs = a.docs;
  spec.p_marked_fake = a.p_fake;
  spec.p_marked_real = a.p_real;
  const std::uint64_t seed = o.seed.value_or(1);

  std::string data_cfg = "# synthetic datasets written by 'ufnd synth'\ndatasets=";
  std::string baselines = "dataset,accuracy,source\n";
  for (std::size_t i = 0; i < a.datasets; ++i) {
    const std::string name = "toy" + std::to_string(i + 1);
    data_cfg += (i ? "," : "") + name;
  }
  data_cfg += "\n";
  for (std::size_t i = 0; i < a.datasets; ++i) {
    const std::string name = "toy" + std::to_string(i + 1);
    const auto corpus = make_synthetic(name, spec, seed + i);
    std::string csv = "title,text,label\n";
    for (const auto& d : corpus.docs) {
      // First two words become the title so loading exercises column concatenation.
      std::size_t cut = d.text.find(' ');
      if (cut != std::string::npos) cut = d.text.find(' ', cut + 1);
      const std::string title = cut == std::string::npos ? d.text : d.text.substr(0, cut);
      const std::string body = cut == std::string::npos ? "" : d.text.substr(cut + 1);
      csv += join_record({title, body, d.label == kLabelFake ? "FAKE" : "REAL"}) + "\n";
    }
    write_text(join_path(out, name + ".csv"), csv, m);
    data_cfg += "dataset." + name + ".path=" + name + ".csv\n";
    data_cfg += "dataset." + name + ".text_columns=title,text\n";
    data_cfg += "dataset." + name + ".label_column=label\n";
    data_cfg += "dataset." + name + ".labels=REAL:0,FAKE:1\n";
    baselines += name + ",0.85,learnability oracle (toy)\n";
  }
  data_cfg += "unify.baselines=baselines.csv\n";
  write_text(join_path(out, "data.cfg"), data_cfg, m);
  write_text(join_path(out, "baselines.csv"), baselines, m);
  m.note("bayes_accuracy", format_double(synthetic_bayes_accuracy(spec)));
  m.write(out);
  std::cout << "wrote " << a.datasets << " synthetic datasets of " << a.docs << " documents to "
            << out << "\n";
  return 0;
}

int cmd_prep(const Overrides& o, const std::vector<std::string>& argv) {
  const auto r = resolve(o);
  const auto out = require_out(o);
  Manifest m = start_manifest("prep", argv, o);
  const auto sets = load_datasets(r);
  record_inputs(sets, m);
  const auto data = prepare_from(r, sets);

  write_text(join_path(out, "vocab.txt"), data.vocab.serialize(), m);
  auto save_set = [&](const EncodedSet& s) {
    const auto path = join_path(out, s.name + ".enc");
    s.save(path);
    m.output(path);
  };
  for (const auto& d : data.datasets) {
    save_set(d.train);
    save_set(d.test);
  }
  EncodedSet ctrain = data.combined.train, ctest = data.combined.test;
  save_set(ctrain);
  save_set(ctest);

  std::string reports;
  std::string stats = "# sequence lengths before truncation (CLS excluded)\n";
  stats += "min_word_len=" + std::to_string(r.prep.min_word_len) + "\n";
  std::vector<Corpus> all;
  for (const auto& d : sets) {
    for (const auto& rep : d.reports) reports += rep.to_text() + "\n";
    std::vector<Corpus> parts{d.split.train, d.split.test};
    const auto whole = combine(parts, d.name);
    all.push_back(whole);
    stats += "[" + d.name + "]\n" + seq_length_stats(whole, r.prep).to_text();
  }
  stats += "[combined]\n" + seq_length_stats(combine(all, "combined"), r.prep).to_text();
  write_text(join_path(out, "load_report.txt"), reports, m);
  write_text(join_path(out, "length_stats.txt"), stats, m);
  write_config_copy(r, out, m);
  m.note("vocab_hash", hex64(data.vocab.hash()));
  m.note("vocab_size", std::to_string(data.vocab.size()));
  m.write(out);
  std::cout << "vocabulary: " << data.vocab.size() << " ids; datasets: " << data.datasets.size()
            << "; combined train/test: " << ctrain.size() << "/" << ctest.size() << "\n";
  return 0;
}

namespace {

EncodedSet load_set(const std::string& path) {
  if (!fs::exists(path)) throw InputError("encoded corpus not found: " + path);
  try {
    return EncodedSet::load(path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

}  // namespace

int cmd_train(const Overrides& o, const TrainArgs& a, const std::vector<std::string>& argv) {
  auto r = resolve(o);
  const auto out = require_out(o);
  Manifest m = start_manifest("train", argv, o);
  const auto train_path = join_path(a.data_dir, a.dataset + ".train.enc");
  const auto test_path = join_path(a.data_dir, a.dataset + ".test.enc");
  const auto vocab_path = join_path(a.data_dir, "vocab.txt");
  const auto train_set = load_set(train_path);
  const auto test_set = load_set(test_path);
  if (!fs::exists(vocab_path)) throw InputError("vocabulary not found: " + vocab_path);
  const auto vocab = Vocabulary::load(vocab_path);
  m.input(train_path);
  m.input(test_path);
  m.input(vocab_path);
  if (train_set.vocab_hash != vocab.hash() || test_set.vocab_hash != vocab.hash()) {
    throw IncompatibleError("encoded corpus in " + a.data_dir + " was built with another vocabulary");
  }
  if (train_set.max_seq_len != r.train.max_seq_len) {
    // The encoded data fixes the sequence length.
    r.train.max_seq_len = train_set.max_seq_len;
    r.prep.max_seq_len = train_set.max_seq_len;
    r.model = apply_train_config(r.model, r.train);
    write_config(r.kv, r.model);
    write_config(r.kv, r.train);
    write_config(r.kv, r.prep);
    m.note("max_seq_len_source", "encoded corpus");
  }
  if (vocab.size() > r.model.encoder.vocab_size) {
    throw IncompatibleError("vocabulary has " + std::to_string(vocab.size()) +
                            " ids but model.vocab_size is " +
                            std::to_string(r.model.encoder.vocab_size));
  }

  Model<float> model(r.model, r.train.seed);
  TrainOptions opts;
  opts.dataset = a.dataset;
  opts.vocab_hash = vocab.hash();
  Checkpoint resume;
  if (!a.resume.empty()) {
    try {
      resume = load_checkpoint(a.resume);
    } catch (const CheckpointError& e) {
      throw InputError(e.what());
    }
    m.input(a.resume);
    opts.resume = &resume;
  }
  opts.on_epoch = [&](const EpochRecord& e) {
    m.timing("epoch." + std::to_string(e.epoch), e.seconds);
    std::cerr << "epoch " << e.epoch << " loss " << e.train_loss << " val_accuracy "
              << e.val.accuracy << "\n";
  };
  TrainResult res;
  try {
    res = train(model, train_set, test_set, r.train, opts);
  } catch (const CheckpointError& e) {
    throw IncompatibleError(e.what());
  }

  write_checkpoint(res.best, join_path(out, "best.ckpt"), m);
  write_checkpoint(res.last, join_path(out, "last.ckpt"), m);
  write_text(join_path(out, "report.txt"), res.report.to_text(), m);
  write_text(join_path(out, "summary.csv"),
             TrainReport::summary_header() + "\n" + res.report.summary_row() + "\n", m);
  write_config_copy(r, out, m);
  m.note("config_hash", res.best.config_hash);
  m.timing("total", res.report.total_seconds);
  m.write(out);
  std::cout << "best epoch " << res.report.best_epoch << " validation accuracy "
            << format_double(res.report.best_val_accuracy) << "\n";
  return 0;
}

int cmd_unify(const Overrides& o, const UnifyArgs& a, const std::vector<std::string>& argv) {
  const auto r = resolve(o);
  const auto out = require_out(o);
  Manifest m = start_manifest("unify", argv, o);
  const auto sets = load_datasets(r);
  record_inputs(sets, m);
  const auto data = prepare_from(r, sets);

  std::string baseline_path = a.baselines;
  if (baseline_path.empty() && r.kv.has("unify.baselines")) {
    baseline_path = (fs::path(r.base_dir) / r.kv.get("unify.baselines")).string();
  }
  if (baseline_path.empty()) throw InputError("no baseline file (use --baselines or unify.baselines)");
  if (!fs::exists(baseline_path)) throw InputError("baseline file not found: " + baseline_path);
  BaselineTable baselines;
  try {
    baselines = BaselineTable::load(baseline_path);
    for (const auto& d : data.datasets) baselines.at(d.name);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  m.input(baseline_path);

  // Candidate grid: every (lr, dropout) pair, lr-major.
  std::vector<TrainConfig> grid;
  for (double lr : parse_double_list(r.kv.get_or("grid.lr", format_double(r.train.lr)))) {
    for (double dr : parse_double_list(r.kv.get_or("grid.dropout", format_double(r.train.dropout_rate)))) {
      auto tc = r.train;
      tc.lr = lr;
      tc.dropout_rate = dr;
      grid.push_back(tc);
    }
  }
  const auto batch_sizes =
      parse_size_list(r.kv.get_or("grid.batch_sizes", size_list(table_batch_sizes())));
  const double threshold = r.kv.get_double("unify.threshold", 0.1);

  auto t0 = clock_type::now();
  const auto p1 = phase_one(data, r.model, grid, batch_sizes, baselines, threshold);
  m.timing("phase_one", seconds_since(t0));
  write_text(join_path(out, "phase_one.txt"), p1.to_text(), m);
  write_text(join_path(out, "baselines_used.csv"), baselines.to_delimited(), m);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::string suffix = grid.size() > 1 ? "_config" + std::to_string(g) : "";
    write_table(table_one(p1, g), join_path(out, "table1" + suffix), m);
    for (const auto& d : data.datasets) {
      write_table(table_one(p1, g, d.name), join_path(out, "table1_" + d.name + suffix), m);
    }
  }
  write_config_copy(r, out, m);

  if (!p1.accepted && !a.force_phase_two) {
    m.note("phase_one", "infeasible");
    m.write(out);
    std::cout << "phase one infeasible at threshold " << format_double(threshold)
              << "; minimum deficits:";
    for (std::size_t i = 0; i < p1.datasets.size(); ++i) {
      std::cout << " " << p1.datasets[i] << "=" << format_double(p1.min_deficits[i]);
    }
    std::cout << "\n";
    return 0;
  }
  m.note("phase_one", p1.accepted ? "accepted" : "infeasible (phase two forced)");
  m.note("selected_config", std::to_string(p1.selected));

  const bool fresh = r.kv.get_bool("unify.fresh_encoder", false);
  const Checkpoint* source = nullptr;
  std::string source_name = "fresh";
  if (!fresh) {
    const auto idx = encoder_source_index(p1);
    source = &p1.checkpoints[idx];
    source_name = p1.datasets[idx];
  }
  const std::size_t p2_batch = r.kv.get_size("unify.phase2_batch_size", r.train.batch_size);
  t0 = clock_type::now();
  const auto p2 = phase_two(data, r.model, p1.shared, p2_batch, source, source_name);
  m.timing("phase_two", seconds_since(t0));
  write_checkpoint(p2.run.best, join_path(out, "combined.best.ckpt"), m);
  write_text(join_path(out, "phase_two_report.txt"), p2.run.report.to_text(), m);
  write_text(join_path(out, "phase_two_summary.csv"),
             TrainReport::summary_header() + "\n" + p2.run.report.summary_row() + "\n", m);
  m.note("encoder_source", p2.encoder_source);
  m.note("config_hash", p2.run.best.config_hash);

  const auto splits = splits_of(sets);
  PrepConfig without = r.prep, with = r.prep;
  without.remove_short = false;
  without.max_seq_len = r.kv.get_size("unify.len_without", 200);
  with.remove_short = true;
  with.max_seq_len = r.kv.get_size("unify.len_with", 120);
  const auto cmp = compare_preprocessing(splits, names_of(sets), r.model, p1.shared, batch_sizes,
                                         without, with, vocab_limit(r));
  m.timing("without_preprocessing", cmp.without.wall_seconds);
  m.timing("with_preprocessing", cmp.with.wall_seconds);
  write_table(cmp.without.table, join_path(out, "table5_without_preprocessing"), m);
  write_table(cmp.with.table, join_path(out, "table6_with_preprocessing"), m);
  write_text(join_path(out, "preprocessing.txt"), cmp.to_text(), m);
  m.write(out);

  std::cout << "phase one " << (p1.accepted ? "accepted" : "infeasible") << " (config "
            << p1.selected << "); phase two validation accuracy "
            << format_double(p2.run.report.best_val_accuracy) << "; cost ratio "
            << format_double(cmp.cost_ratio) << "\n";
  return 0;
}

int cmd_ablate(const Overrides& o, const AblateArgs& a, const std::vector<std::string>& argv) {
  const auto r = resolve(o);
  const auto out = require_out(o);
  Manifest m = start_manifest("ablate", argv, o);
  const auto sets = load_datasets(r);
  record_inputs(sets, m);
  const auto data = prepare_from(r, sets);

  AblationGrid grid;
  const std::string subsets = !a.subsets.empty() ? a.subsets : r.kv.get_or("ablate.subsets", "");
  if (!subsets.empty()) {
    grid.subsets.clear();
    std::istringstream is(subsets);
    std::string part;
    while (std::getline(is, part, ';')) grid.subsets.push_back(parse_size_list(part));
  }
  const std::string sizes = !a.batch_sizes.empty() ? a.batch_sizes : r.kv.get_or("ablate.batch_sizes", "");
  if (!sizes.empty()) grid.batch_sizes = parse_size_list(sizes);
  for (const auto& s : grid.subsets) {
    try {
      select_blocks(r.model.encoder, s);
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("bad block subset: ") + e.what());
    }
  }

  const auto t0 = clock_type::now();
  const auto res = ablate(data.combined, r.model, r.train, grid, data.vocab.hash());
  m.timing("ablation", seconds_since(t0));
  write_table(res.table(), join_path(out, "table8"), m);
  write_config_copy(r, out, m);
  m.write(out);
  std::cout << res.table().to_aligned();
  return 0;
}

int cmd_eval(const Overrides& o, const EvalArgs& a, const std::vector<std::string>& argv) {
  Manifest m = start_manifest("eval", argv, o);
  if (!fs::exists(a.checkpoint)) throw InputError("checkpoint not found: " + a.checkpoint);
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(a.checkpoint);
  } catch (const CheckpointError& e) {
    throw InputError(e.what());
  }
  const auto set_path = join_path(a.data_dir, a.set + ".enc");
  const auto set = load_set(set_path);
  m.input(a.checkpoint);
  m.input(set_path);
  if (set.vocab_hash != ckpt.vocab_hash) {
    throw IncompatibleError("vocabulary mismatch: corpus " + hex64(set.vocab_hash) +
                            ", checkpoint " + hex64(ckpt.vocab_hash));
  }
  if (set.max_seq_len > ckpt.model.encoder.max_seq_len) {
    throw IncompatibleError("corpus max_seq_len " + std::to_string(set.max_seq_len) +
                            " exceeds the checkpoint's " +
                            std::to_string(ckpt.model.encoder.max_seq_len));
  }
  Model<float> model(ckpt.model, 0);
  try {
    restore_state(model, nullptr, ckpt);
  } catch (const CheckpointError& e) {
    throw IncompatibleError(e.what());
  }
  const auto ev = evaluate_detailed(model, set);
  std::ostringstream os;
  os << "# ufnd eval\n"
     << kPositiveClassNote << "\n"
     << "checkpoint=" << a.checkpoint << "\n"
     << "corpus=" << a.set << "\n"
     << "samples=" << set.size() << "\n"
     << "accuracy=" << format_double(ev.metrics.accuracy) << "\n"
     << "precision=" << format_double(ev.metrics.precision) << "\n"
     << "recall=" << format_double(ev.metrics.recall) << "\n"
     << "f1=" << format_double(ev.metrics.f1) << "\n"
     << "degenerate=" << (ev.metrics.degenerate ? "yes" : "no") << "\n"
     << "tp=" << ev.confusion.tp << " fp=" << ev.confusion.fp << " fn=" << ev.confusion.fn
     << " tn=" << ev.confusion.tn << "\n";
  std::cout << os.str();
  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_text(join_path(o.out, "eval.txt"), os.str(), m);
    m.write(o.out);
  }
  return 0;
}

}  // namespace ufnd::cli

#include "app.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ufnd/ops.hpp"
#include "ufnd/rng.hpp"

namespace fs = std::filesystem;

namespace ufnd::cli {

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::string part;
  std::istringstream is(text);
  while (std::getline(is, part, sep)) out.push_back(part);
  if (text.back() == sep) out.emplace_back();
  return out;
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split_on(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(static_cast<std::size_t>(std::stoull(p, &used)));
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::exception&) {
      throw InputError("bad integer '" + p + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_on(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(p, &used));
      if (used != p.size()) throw std::invalid_argument(p);
    } catch (const std::exception&) {
      throw InputError("bad number '" + p + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty list");
  return out;
}

std::string size_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

Resolved resolve(const Overrides& o) {
  Resolved r;
  for (const auto& path : o.configs) {
    if (!fs::exists(path)) throw InputError("config file not found: " + path);
    const auto file = KvConfig::load(path);
    if (file.has("datasets")) r.base_dir = fs::path(path).parent_path().string();
    r.kv.merge(file);
  }
  if (r.base_dir.empty()) r.base_dir = ".";

  auto& kv = r.kv;
  if (o.seed) kv.set("train.seed", std::to_string(*o.seed));
  if (o.batch_size) kv.set("train.batch_size", std::to_string(*o.batch_size));
  if (o.epochs) kv.set("train.epochs", std::to_string(*o.epochs));
  if (o.max_seq_len) kv.set("prep.max_seq_len", std::to_string(*o.max_seq_len));
  if (o.preprocess) kv.set("prep.remove_short", parse_bool(*o.preprocess) ? "on" : "off");
  if (o.blocks) kv.set("model.blocks", *o.blocks);
  if (o.freeze_encoder) kv.set("train.freeze_encoder", parse_bool(*o.freeze_encoder) ? "on" : "off");
  if (o.threshold) kv.set("unify.threshold", format_double(*o.threshold));

  // The sequence length follows the preprocessing preset unless given.
  const bool remove = kv.get_bool("prep.remove_short", true);
  PrepConfig preset = remove ? PrepConfig::with_preprocessing() : PrepConfig::without_preprocessing();
  r.prep = read_prep_config(kv, preset);
  r.prep.validate();

  r.train = read_train_config(kv);
  r.train.max_seq_len = r.prep.max_seq_len;
  r.train.preprocessing_enabled = r.prep.remove_short;
  try {
    r.train.validate();
    r.model = apply_train_config(read_model_config(kv, ModelConfig::desk()), r.train);
    r.model.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid configuration: ") + e.what());
  }
  write_config(kv, r.model);
  write_config(kv, r.train);
  write_config(kv, r.prep);
  if (!kv.has("unify.threshold")) kv.set("unify.threshold", "0.1");
  if (!kv.has("split.ratio")) kv.set("split.ratio", "0.8");
  if (!kv.has("split.seed")) kv.set("split.seed", std::to_string(r.train.seed));
  return r;
}

std::vector<DatasetSpec> dataset_specs(const Resolved& r) {
  const auto& kv = r.kv;
  if (!kv.has("datasets")) throw InputError("config has no 'datasets' key");
  std::vector<DatasetSpec> out;
  auto resolve_path = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (fs::path(r.base_dir) / p).string();
  };
  for (const auto& name : split_on(kv.get("datasets"), ',')) {
    if (name.empty()) throw InputError("empty dataset name in 'datasets'");
    const std::string pre = "dataset." + name + ".";
    DatasetSpec s;
    s.name = name;
    if (!kv.has(pre + "path")) throw InputError("config is missing '" + pre + "path'");
    for (const auto& p : split_on(kv.get(pre + "path"), ';')) s.paths.push_back(resolve_path(p));
    const auto fixed = split_on(kv.get_or(pre + "fixed_labels", ""), ';');
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
      if (i < fixed.size() && !fixed[i].empty() && fixed[i] != "-") {
        s.fixed_labels.push_back(static_cast<int>(parse_size_list(fixed[i]).at(0)));
      } else {
        s.fixed_labels.push_back(std::nullopt);
      }
    }
    if (kv.has(pre + "test_path")) s.test_path = resolve_path(kv.get(pre + "test_path"));
    s.columns.text_columns = split_on(kv.get_or(pre + "text_columns", "text"), ',');
    s.columns.label_column = kv.get_or(pre + "label_column", "label");
    for (const auto& pair : split_on(kv.get_or(pre + "labels", "0:0,1:1"), ',')) {
      const auto colon = pair.rfind(':');
      if (colon == std::string::npos) throw InputError("bad label mapping entry '" + pair + "'");
      s.columns.label_mapping[pair.substr(0, colon)] =
          static_cast<int>(parse_size_list(pair.substr(colon + 1)).at(0));
    }
    const auto delim = kv.get_or(pre + "delimiter", ",");
    s.columns.delimiter = delim == "tab" ? '\t' : delim.at(0);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

LoadResult load_one(const std::string& path, ColumnMap cols, std::optional<int> fixed,
                    const std::string& name) {
  if (!fs::exists(path)) throw InputError("dataset file not found: " + path);
  cols.fixed_label = fixed;
  try {
    return load_dataset(path, cols, name);
  } catch (const CorpusError& e) {
    throw InputError(e.what());
  }
}

}  // namespace

std::vector<LoadedDataset> load_datasets(const Resolved& r) {
  const double ratio = r.kv.get_double("split.ratio", 0.8);
  const std::uint64_t seed = r.kv.get_u64("split.seed", r.train.seed);
  std::vector<LoadedDataset> out;
  for (const auto& spec : dataset_specs(r)) {
    LoadedDataset d;
    d.name = spec.name;
    std::vector<Corpus> parts;
    for (std::size_t i = 0; i < spec.paths.size(); ++i) {
      auto lr = load_one(spec.paths[i], spec.columns, spec.fixed_labels[i], spec.name);
      parts.push_back(std::move(lr.corpus));
      d.reports.push_back(lr.report);
      d.inputs.push_back(spec.paths[i]);
    }
    Corpus all = combine(parts, spec.name);
    all.name = spec.name;
    if (spec.test_path.empty()) {
      try {
        d.split = split(all, ratio, seed);
      } catch (const CorpusError& e) {
        throw InputError(spec.name + ": " + e.what());
      }
    } else {
      // Predefined split, used as-is.
      auto test = load_one(spec.test_path, spec.columns, std::nullopt, spec.name);
      d.reports.push_back(test.report);
      d.inputs.push_back(spec.test_path);
      d.split.ratio = 0.0;
      d.split.seed = seed;
      d.split.train = std::move(all);
      d.split.test = std::move(test.corpus);
      for (std::size_t i = 0; i < d.split.train.size(); ++i) d.split.train_indices.push_back(i);
      for (std::size_t i = 0; i < d.split.test.size(); ++i) {
        d.split.test_indices.push_back(d.split.train.size() + i);
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

Manifest::Manifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_(now_iso()) {}

void Manifest::set_config(const KvConfig& kv) { config_ = kv; }

void Manifest::input(const std::string& path) { inputs_.emplace_back(path, file_digest(path)); }

void Manifest::output(const std::string& path) { outputs_.push_back(path); }

void Manifest::note(const std::string& key, const std::string& value) { notes_[key] = value; }

void Manifest::timing(const std::string& key, double seconds) { timings_[key] = seconds; }

void Manifest::write(const std::string& out_dir) {
  using nlohmann::json;
  const std::string path = join_path(out_dir, "manifest.json");
  json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["config"] = config_.entries();
  j["config_file_hash"] = config_.hash_hex();
  j["seeds"] = {{"train", config_.get_or("train.seed", "")},
                {"split", config_.get_or("split.seed", "")}};
  json inputs = json::array();
  for (const auto& [p, d] : inputs_) inputs.push_back({{"path", p}, {"fnv1a64", d}});
  j["inputs"] = inputs;
  auto outs = outputs_;
  outs.push_back(path);
  j["outputs"] = outs;
  j["notes"] = notes_;
  j["timings_seconds"] = timings_;
  j["rng_algorithm"] = std::string(Rng::algorithm);
  j["gelu"] = std::string(gelu_variant);
  j["started"] = started_;
  j["finished"] = now_iso();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void write_text(const std::string& path, const std::string& text, Manifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  m.output(path);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

}  // namespace ufnd::cli

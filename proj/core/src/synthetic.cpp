#include "ufnd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "ufnd/rng.hpp"

namespace ufnd {

namespace {

constexpr std::array<const char*, 24> kFiller{
    "report", "officials", "government", "market", "people", "according", "statement",
    "country", "police", "health", "election", "company", "minister", "local", "week",
    "sources", "public", "city", "later", "during", "policy", "states", "court", "million"};
constexpr std::array<const char*, 8> kShort{"a", "an", "of", "to", "in", "is", "on", "it"};

}  // namespace

std::string marker_token(std::size_t i) {
  if (i >= 26) throw std::invalid_argument("marker index out of range");
  return std::string("marker") + static_cast<char>('a' + i);
}

Corpus make_synthetic(const std::string& name, const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.markers_per_doc > spec.marker_count) {
    throw std::invalid_argument("markers_per_doc exceeds marker_count");
  }
  if (spec.min_words == 0 || spec.max_words < spec.min_words) {
    throw std::invalid_argument("bad word-count range");
  }
  Rng rng(seed, "synthetic." + name);
  Corpus c;
  c.name = name;
  c.docs.reserve(spec.docs);
  for (std::size_t i = 0; i < spec.docs; ++i) {
    const int label = (i % 2 == 0) ? kLabelReal : kLabelFake;
    const double p = label == kLabelFake ? spec.p_marked_fake : spec.p_marked_real;
    const std::size_t n_words =
        spec.min_words + static_cast<std::size_t>(rng.below(spec.max_words - spec.min_words + 1));
    std::vector<std::string> words;
    for (std::size_t w = 0; w < n_words; ++w) {
      if (rng.uniform() < spec.short_word_rate) {
        words.emplace_back(kShort[rng.below(kShort.size())]);
      } else {
        words.emplace_back(kFiller[rng.below(kFiller.size())]);
      }
    }
    if (rng.uniform() < p) {
      std::vector<std::size_t> pool(spec.marker_count);
      for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
      for (std::size_t k = 0; k < spec.markers_per_doc; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
        std::swap(pool[k], pool[j]);
        const auto pos = static_cast<std::size_t>(rng.below(words.size() + 1));
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), marker_token(pool[k]));
      }
    }
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) text += ' ';
      text += words[w];
    }
    // Capitalize the first letter so normalization has work to do.
    if (!text.empty() && text[0] >= 'a' && text[0] <= 'z') text[0] = static_cast<char>(text[0] - 32);
    c.docs.push_back({std::move(text), label, name});
  }
  return c;
}

double synthetic_bayes_accuracy(const SyntheticSpec& spec) {
  const double f = spec.p_marked_fake;
  const double r = spec.p_marked_real;
  // Predict fake when marked iff f >= r, real when unmarked iff 1-r >= 1-f.
  return 0.5 * std::max(f, r) + 0.5 * std::max(1.0 - r, 1.0 - f);
}

}  // namespace ufnd

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ufnd/corpus.hpp"

namespace ufnd {

// Toy fake-news task. Each document is filler words plus, with a
// class-dependent probability, `markers_per_doc` distinct marker tokens
// drawn from a pool of `marker_count`. Labels alternate so classes balance.
struct SyntheticSpec {
  std::size_t docs = 200;
  std::size_t marker_count = 5;
  std::size_t markers_per_doc = 2;
  double p_marked_fake = 0.9;
  double p_marked_real = 0.1;
  std::size_t min_words = 8;
  std::size_t max_words = 16;
  // Fraction of filler positions that get a one- or two-letter word, so
  // short-word removal has something to remove.
  double short_word_rate = 0.3;
};

// Marker i (0-based) renders as "marker" + letter, e.g. "markera".
std::string marker_token(std::size_t i);

Corpus make_synthetic(const std::string& name, const SyntheticSpec& spec, std::uint64_t seed);

// Best achievable accuracy: a marked document is fake with probability
// p_f / (p_f + p_r) under balanced classes.
double synthetic_bayes_accuracy(const SyntheticSpec& spec);

}  // namespace ufnd

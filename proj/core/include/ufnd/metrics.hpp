#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace ufnd {

// Positive class is fake (label 1).
inline constexpr const char* kPositiveClassNote = "positive_class=1 (fake)";

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  // The same counts with class 0 treated as positive.
  Confusion swapped() const { return {tn, fn, fp, tp}; }
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when precision, recall, or f1 hit a zero denominator and were
  // reported as 0.
  bool degenerate = false;

  bool operator==(const Metrics&) const = default;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> targets);
Metrics compute_metrics(const Confusion& c);

double round_to(double value, int decimals);

}  // namespace ufnd

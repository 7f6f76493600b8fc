#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "ufnd/metrics.hpp"

using namespace ufnd;

TEST_SUITE("metrics") {

TEST_CASE("confusion enumeration") {
  std::vector<int> p{1, 1, 0, 0}, t{1, 0, 0, 1};
  auto c = confusion(p, t);
  CHECK(c == Confusion{1, 1, 1, 1});
  auto perfect = confusion(t, t);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);
}

TEST_CASE("confusion argument errors") {
  std::vector<int> a{0, 1}, b{0}, bad{0, 2}, empty;
  CHECK_THROWS_AS(confusion(a, b), std::invalid_argument);
  CHECK_THROWS_AS(confusion(bad, a), std::invalid_argument);
  CHECK_THROWS_AS(confusion(empty, empty), std::invalid_argument);
}

TEST_CASE("hand case") {
  auto m = compute_metrics({3, 1, 1, 5});
  CHECK(m.accuracy == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m.precision == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_FALSE(m.degenerate);
}

TEST_CASE("degenerate denominators") {
  auto m = compute_metrics({0, 0, 2, 3});
  CHECK(m.precision == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.degenerate);
  CHECK(m.accuracy == doctest::Approx(0.6));
}

TEST_CASE("random vectors against a brute-force tally") {
  Rng rng(17, "test");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = int(rng.below(2));
      t[i] = int(rng.below(2));
    }
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] == 1 && t[i] == 1) tp += 1;
      if (p[i] == 1 && t[i] == 0) fp += 1;
      if (p[i] == 0 && t[i] == 1) fn += 1;
      if (p[i] == 0 && t[i] == 0) tn += 1;
    }
    auto c = confusion(p, t);
    CHECK(double(c.tp) == tp);
    CHECK(double(c.fp) == fp);
    CHECK(double(c.fn) == fn);
    CHECK(double(c.tn) == tn);
    auto m = compute_metrics(c);
    const double acc = (tp + tn) / n;
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    CHECK(std::abs(m.accuracy - acc) <= 1e-12);
    CHECK(std::abs(m.precision - prec) <= 1e-12);
    CHECK(std::abs(m.recall - rec) <= 1e-12);
    CHECK(std::abs(m.f1 - f1) <= 1e-12);
  }
}

TEST_CASE("f1 lies between precision and recall over a count grid") {
  for (std::size_t tp = 0; tp <= 6; ++tp)
    for (std::size_t fp = 0; fp <= 6; ++fp)
      for (std::size_t fn = 0; fn <= 6; ++fn)
        for (std::size_t tn = 0; tn <= 3; ++tn) {
          Confusion c{tp, fp, fn, tn};
          if (c.total() == 0) continue;
          auto m = compute_metrics(c);
          for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
          }
          CHECK((m.f1 == 0.0) == (tp == 0));
          if (tp > 0) {
            CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
            CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
          }
          CHECK(compute_metrics(c.swapped()).accuracy == m.accuracy);
        }
}

TEST_CASE("rounding helpers") {
  CHECK(round_to(0.98245, 2) == doctest::Approx(0.98));
  CHECK(round_to(0.96214, 4) == doctest::Approx(0.9621));
  CHECK(std::string(kPositiveClassNote) == "positive_class=1 (fake)");
}

}  // TEST_SUITE

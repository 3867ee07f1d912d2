#include <cmath>
#include <optional>
#include <random>

#include "doctest.h"
#include "fairrep/fairmetrics.hpp"
#include "fairrep/models.hpp"

using namespace fairrep;

namespace {

ConfusionSplit make(GroupCounts g0, GroupCounts g1) { return {{g0, g1}}; }

std::optional<double> q(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

// Independent restatement of the sixteen formulas, group 0 against group 1.
std::array<std::optional<double>, 16> reference(const ConfusionSplit& cs) {
  const auto& a = cs.group[0];
  const auto& b = cs.group[1];
  auto d = [](std::optional<double> x, std::optional<double> y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    return *x - *y;
  };
  auto r = [](std::optional<double> x, std::optional<double> y) -> std::optional<double> {
    if (!x || !y || *y == 0.0) return std::nullopt;
    return *x / *y;
  };
  const double n = double(a.n() + b.n());
  auto fpr = [](const GroupCounts& g) { return q(double(g.fp), double(g.fp + g.tn)); };
  auto tpr = [](const GroupCounts& g) { return q(double(g.tp), double(g.tp + g.fn)); };
  auto fnr = [](const GroupCounts& g) { return q(double(g.fn), double(g.tp + g.fn)); };
  auto fdr = [](const GroupCounts& g) { return q(double(g.fp), double(g.tp + g.fp)); };
  auto fomr = [](const GroupCounts& g) { return q(double(g.fn), double(g.tn + g.fn)); };
  auto ppv = [](const GroupCounts& g) { return q(double(g.tp), double(g.tp + g.fp)); };
  auto pos = [](const GroupCounts& g) { return q(double(g.tp + g.fp), double(g.n())); };
  std::array<std::optional<double>, 16> f;
  const auto pe = d(fpr(a), fpr(b)), eo = d(tpr(a), tpr(b));
  if (pe && eo) f[0] = 0.5 * (std::abs(*pe) + std::abs(*eo));
  f[1] = d(q(double(a.fp + a.fn), n), q(double(b.fp + b.fn), n));
  f[2] = r(q(double(a.fp + a.fn), n), q(double(b.fp + b.fn), n));
  f[3] = d(fdr(a), fdr(b));
  f[4] = r(fdr(a), fdr(b));
  f[5] = pe;
  f[6] = r(fpr(a), fpr(b));
  f[7] = d(fomr(a), fomr(b));
  f[8] = r(fomr(a), fomr(b));
  f[9] = r(pos(a), pos(b));
  f[10] = d(pos(a), pos(b));
  f[11] = eo;
  f[12] = d(fnr(a), fnr(b));
  f[13] = r(fnr(a), fnr(b));
  if (pe && eo) f[14] = 0.5 * (*pe + *eo);
  f[15] = d(ppv(a), ppv(b));
  return f;
}

GroupCounts random_counts(std::mt19937_64& gen, int lo = 0) {
  std::uniform_int_distribution<int> c(lo, 100);
  return {c(gen), c(gen), c(gen), c(gen)};
}

}  // namespace

TEST_CASE("worked example") {
  const auto fv = fairness_vector(make({20, 10, 5, 15}, {30, 5, 10, 25}));
  CHECK(fv[Metric::statistical_parity] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fv[Metric::disparate_impact] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(fv[Metric::equal_opportunity] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(fv[Metric::predictive_equality] == doctest::Approx(10.0 / 25 - 5.0 / 30).epsilon(1e-12));
  CHECK(fv.valid.all());
}

TEST_CASE("matches the reference formulas on random splits") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const ConfusionSplit cs = make(random_counts(gen), random_counts(gen));
    const auto fv = fairness_vector(cs);
    const auto ref = reference(cs);
    const bool groups_nonempty = cs.group[0].n() > 0 && cs.group[1].n() > 0;
    for (int i = 0; i < kMetricCount; ++i) {
      CAPTURE(i);
      const bool expect_valid = groups_nonempty && ref[static_cast<std::size_t>(i)].has_value();
      REQUIRE(fv.valid(i) == expect_valid);
      if (expect_valid) {
        CHECK(std::isfinite(fv.values(i)));
        CHECK(std::abs(fv.values(i) - *ref[static_cast<std::size_t>(i)]) <= 1e-12);
      } else {
        CHECK(std::isnan(fv.values(i)));
      }
    }
  }
}

TEST_CASE("value ranges") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto fv = fairness_vector(make(random_counts(gen), random_counts(gen)));
    for (int i = 0; i < kMetricCount; ++i) {
      if (!fv.valid(i)) continue;
      switch (metric_kind(i)) {
        case MetricKind::absolute: CHECK((fv.values(i) >= 0.0 && fv.values(i) <= 1.0)); break;
        case MetricKind::difference: CHECK((fv.values(i) >= -1.0 && fv.values(i) <= 1.0)); break;
        case MetricKind::ratio: CHECK(fv.values(i) >= 0.0); break;
      }
    }
  }
}

TEST_CASE("strictly positive cells give all sixteen values") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 500; ++trial) CHECK(fairness_vector(make(random_counts(gen, 1), random_counts(gen, 1))).valid.all());
}

TEST_CASE("symmetric groups") {
  const auto fv = fairness_vector(make({7, 3, 4, 9}, {7, 3, 4, 9}));
  for (int i = 0; i < kMetricCount; ++i) {
    if (metric_kind(i) == MetricKind::ratio) CHECK(fv.values(i) == 1.0);
    else CHECK(fv.values(i) == 0.0);
  }
}

TEST_CASE("zero false-positive denominator in the privileged group") {
  const auto fv = fairness_vector(make({5, 5, 5, 5}, {5, 0, 5, 0}));
  CHECK(!fv.is_valid(Metric::predictive_equality));
  CHECK(!fv.is_valid(Metric::fpr_ratio));
  CHECK(!fv.is_valid(Metric::equalized_odds));
  CHECK(fv.is_valid(Metric::statistical_parity));
  CHECK(fv.is_valid(Metric::equal_opportunity));
}

TEST_CASE("an empty group invalidates everything") {
  CHECK(!fairness_vector(make({0, 0, 0, 0}, {1, 2, 3, 4})).valid.any());
}

TEST_CASE("confusion_split tallies") {
  SUBCASE("one row per cell") {
    BinaryVector p(8), y(8), s(8);
    p << 0, 1, 0, 1, 0, 1, 0, 1;
    y << 0, 0, 1, 1, 0, 0, 1, 1;
    s << 0, 0, 0, 0, 1, 1, 1, 1;
    const auto cs = confusion_split(p, y, s);
    for (const auto& g : cs.group) CHECK((g.tp == 1 && g.fp == 1 && g.fn == 1 && g.tn == 1));
  }
  SUBCASE("perfect predictions") {
    BinaryVector y(6), s(6);
    y << 1, 0, 1, 0, 0, 1;
    s << 1, 1, 0, 0, 1, 0;
    const auto cs = confusion_split(y, y, s);
    for (const auto& g : cs.group) CHECK((g.fp == 0 && g.fn == 0));
    CHECK(cs.accuracy() == 1.0);
  }
  SUBCASE("random rows against a brute-force tally") {
    std::mt19937_64 gen(20);
    std::bernoulli_distribution coin;
    for (int trial = 0; trial < 50; ++trial) {
      BinaryVector p(20), y(20), s(20);
      for (int i = 0; i < 20; ++i) {
        p(i) = coin(gen);
        y(i) = coin(gen);
        s(i) = coin(gen);
      }
      long cells[2][2][2] = {};
      for (int i = 0; i < 20; ++i) ++cells[s(i)][y(i)][p(i)];
      const auto cs = confusion_split(p, y, s);
      for (int g = 0; g < 2; ++g) {
        CHECK(cs.group[g].tp == cells[g][1][1]);
        CHECK(cs.group[g].fn == cells[g][1][0]);
        CHECK(cs.group[g].fp == cells[g][0][1]);
        CHECK(cs.group[g].tn == cells[g][0][0]);
      }
      CHECK(cs.total() == 20);
      CHECK(cs.accuracy() == accuracy(p, y));
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(confusion_split(BinaryVector::Zero(3), BinaryVector::Zero(2), BinaryVector::Zero(3)),
                    std::invalid_argument);
  }
}

TEST_CASE("metric names and gaps") {
  CHECK(metric_label(0) == "f1");
  CHECK(metric_name(15) == "predictive_parity");
  CHECK(parse_metric("f12") == 11);
  CHECK(parse_metric("equal_opportunity") == 11);
  CHECK(parse_metric("3") == 2);
  CHECK_THROWS_AS(parse_metric("f17"), ConfigError);
  CHECK(fairness_gap(index_of(Metric::disparate_impact), 0.8) == doctest::Approx(0.2));
  CHECK(fairness_gap(index_of(Metric::statistical_parity), -0.3) == doctest::Approx(0.3));
}

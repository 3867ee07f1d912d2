#include <cmath>
#include <random>

#include "doctest.h"
#include "fairrep/estimator.hpp"
#include "test_support.hpp"

using namespace fairrep;

namespace {

// Textbook two-pass formula.
double two_pass(const Vector& x, const Vector& y) {
  const double mx = x.mean(), my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sxy += (x(i) - mx) * (y(i) - my);
    sxx += (x(i) - mx) * (x(i) - mx);
    syy += (y(i) - my) * (y(i) - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Standard normal quantile by bisection on the complementary error function.
double bisect_quantile(double p) {
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EstimatorConfig small_config(std::uint64_t seed) {
  EstimatorConfig c;
  c.n_samples = 40;
  c.n_iterations = 3;
  c.min_valid_pairs = 10;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("pearson against the two-pass reference") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x(i) = z(gen);
      y(i) = 0.3 * x(i) + z(gen);
    }
    CHECK(std::abs(*pearson(x, y) - two_pass(x, y)) <= 1e-12);
  }
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << 2, 4, 7;
  CHECK(*pearson(a, b) == doctest::Approx(two_pass(a, b)).epsilon(1e-12));
  CHECK(*pearson(a, a) == 1.0);
  CHECK(*pearson(a, Vector(-a)) == -1.0);
  CHECK(!pearson(a, Vector::Constant(3, 2.0)).has_value());
  CHECK(!pearson(Vector::Ones(1), Vector::Ones(1)).has_value());
}

TEST_CASE("pearson with a validity mask") {
  Vector x(5), y(5);
  x << 1, 2, 100, 3, 4;
  y << 1, 2, -50, 3, 5;
  Eigen::Array<bool, 5, 1> m;
  m << true, true, false, true, true;
  Vector xs(4), ys(4);
  xs << 1, 2, 3, 4;
  ys << 1, 2, 3, 5;
  CHECK(*pearson(x, y, m) == doctest::Approx(two_pass(xs, ys)).epsilon(1e-12));
}

TEST_CASE("normal quantile and confidence error") {
  for (double p : {0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.9999}) CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-9);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  Vector v(2);
  v << 0.8, 1.0;
  // s = 0.1414..., s / sqrt(2) = 0.1
  CHECK(confidence_error(v, 0.95) == doctest::Approx(0.1 * bisect_quantile(0.975)).epsilon(1e-9));
  CHECK(confidence_error(v, 0.95) == doctest::Approx(0.19600).epsilon(1e-4));
  CHECK_THROWS_AS(confidence_error(Vector::Ones(1), 0.95), std::invalid_argument);
}

TEST_CASE("ratio vectors and stratified bootstrap") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto w = sample_ratios(rng);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((w.array() >= 0.0).all());
  }
  GroupPartition gp;
  for (int g = 0; g < 4; ++g)
    for (int j = 0; j < 10; ++j) gp.strata[static_cast<std::size_t>(g)].push_back(100 * g + j);
  Eigen::Vector4d w(0.1, 0.2, 0.3, 0.4);
  const IndexList rows = bootstrap_training_set(gp, w, 200, rng);
  std::array<long, 4> counts{};
  for (auto r : rows) ++counts[static_cast<std::size_t>(r / 100)];
  CHECK(counts == std::array<long, 4>{20, 40, 60, 80});

  gp.strata[1].clear();
  const IndexList renorm = bootstrap_training_set(gp, w, 160, rng);
  counts = {};
  for (auto r : renorm) ++counts[static_cast<std::size_t>(r / 100)];
  CHECK(counts == std::array<long, 4>{20, 0, 60, 80});
  CHECK_THROWS_AS(bootstrap_training_set(GroupPartition{}, w, 10, rng), std::invalid_argument);
}

TEST_CASE("oracle is deterministic in its rng") {
  const Dataset ds = testing::synthetic_dataset(300, 4);
  const Split sp = split(ds, {0.3, 1});
  const GroupPartition gp = partition_groups(ds, sp.train);
  const ModelSpec spec{Family::logit, {}, 0};
  OracleConfig oc;
  Rng a(77), b(77);
  const auto s1 = sampling_oracle(gp, ds, spec, oc, sp.test, a);
  const auto s2 = sampling_oracle(gp, ds, spec, oc, sp.test, b);
  CHECK(s1.accuracy == s2.accuracy);
  CHECK(s1.fairness.values.cwiseEqual(s2.fairness.values).count() + (s1.fairness.valid.array() == false).count() >= 16);
  CHECK(s1.accuracy > 0.5);
}

TEST_CASE("corr_estimate structure") {
  const Dataset ds = testing::synthetic_dataset(400, 5);
  const ModelSpec spec{Family::logit, {}, 0};
  const auto est = corr_estimate(ds, spec, OracleConfig{}, small_config(8));
  CHECK(est.per_iteration.size() == 3);
  CHECK(est.tables.size() == 3);
  for (const auto& t : est.tables) CHECK(t.rows.size() == 40);
  for (int i = 0; i < kMetricCount; ++i)
    for (int j = 0; j < kMetricCount; ++j) {
      const double m = est.mean(i, j);
      CHECK((std::isnan(m) == std::isnan(est.mean(j, i))));
      if (std::isnan(m)) {
        CHECK(std::isnan(est.conf_error(i, j)));
        continue;
      }
      CHECK(m == est.mean(j, i));
      CHECK(m >= -1.0);
      CHECK(m <= 1.0);
      CHECK(est.conf_error(i, j) >= 0.0);
      CHECK(est.support(i, j) >= 10);
    }
  for (int i = 0; i < kMetricCount; ++i)
    if (est.defined(i, i)) CHECK(est.mean(i, i) == 1.0);
  const int f12 = index_of(Metric::equal_opportunity), f13 = index_of(Metric::fnr_difference);
  REQUIRE(est.defined(f12, f13));
  CHECK(std::abs(est.mean(f12, f13) + 1.0) < 1e-9);
  CHECK(est.conf_error(f12, f13) < 1e-9);
}

TEST_CASE("corr_estimate does not depend on the thread count") {
  const Dataset ds = testing::synthetic_dataset(300, 6);
  const ModelSpec spec{Family::logit, {}, 0};
  auto c1 = small_config(21);
  auto c3 = c1;
  c3.threads = 3;
  const auto a = corr_estimate(ds, spec, OracleConfig{}, c1);
  const auto b = corr_estimate(ds, spec, OracleConfig{}, c3);
  CHECK(a.mean.cwiseEqual(b.mean).count() + a.mean.array().isNaN().count() == 256);
  CHECK(a.support == b.support);
  const auto c = corr_estimate(ds, spec, OracleConfig{}, small_config(22));
  CHECK(!(c.mean.array().isNaN() || c.mean.array() == a.mean.array()).all());
}

TEST_CASE("an unreachable accuracy floor raises EstimationError") {
  const Dataset ds = testing::synthetic_dataset(200, 7, 0.0);
  OracleConfig oc;
  oc.accept_threshold = 0.999;
  oc.max_attempts_per_sample = 2;
  CHECK_THROWS_AS(corr_estimate(ds, ModelSpec{Family::logit, {}, 0}, oc, small_config(1)), EstimationError);
}

TEST_CASE("config validation") {
  EstimatorConfig c;
  c.n_iterations = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  OracleConfig o;
  o.accept_threshold = 1.5;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  CHECK(OracleConfig{}.resolve_t_size(5000) == 2000);
  CHECK(OracleConfig{}.resolve_t_size(700) == 700);
}

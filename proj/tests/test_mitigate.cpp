#include <cmath>

#include "doctest.h"
#include "fairrep/mitigate.hpp"
#include "test_support.hpp"

using namespace fairrep;

namespace {

struct Fixture {
  Dataset ds;
  Split sp;
  EvaluationSet test;
  TrainedModel model;
};

Fixture make_fixture(double bias, std::uint64_t seed) {
  Dataset ds = testing::synthetic_dataset(1500, seed, bias);
  Split sp = split(ds, {0.3, seed});
  const Dataset train_set = select_rows(ds, sp.train);
  TrainedModel model = train(ModelSpec{Family::logit, {}, seed}, train_set.features, train_set.label);
  EvaluationSet test = make_evaluation_set(ds, sp.test);
  return {std::move(ds), std::move(sp), std::move(test), std::move(model)};
}

}  // namespace

TEST_CASE("default grid") {
  const auto g = MitigationOptions::default_grid();
  REQUIRE(g.size() == 19);
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g.back() == doctest::Approx(0.95));
}

TEST_CASE("gaps use distance from parity") {
  FairnessVector fv;
  fv.values.setConstant(0.2);
  fv.valid.setConstant(true);
  fv.values(index_of(Metric::disparate_impact)) = 0.7;
  fv.valid(0) = false;
  fv.values(0) = std::nan("");
  const auto g = fairness_gaps(fv);
  CHECK(std::isnan(g(0)));
  CHECK(g(index_of(Metric::disparate_impact)) == doctest::Approx(0.3));
  CHECK(g(index_of(Metric::fpr_ratio)) == doctest::Approx(0.8));
  CHECK(g(index_of(Metric::statistical_parity)) == doctest::Approx(0.2));
}

TEST_CASE("group thresholds shrink the target gap within the accuracy floor") {
  const Fixture fx = make_fixture(0.8, 3);
  for (Metric target : {Metric::statistical_parity, Metric::equal_opportunity, Metric::disparate_impact}) {
    CAPTURE(index_of(target));
    const auto r = mitigate_thresholds(fx.model, fx.test, index_of(target));
    REQUIRE(!r.noop);
    CHECK(r.target_reduction() > 0.0);
    CHECK(r.accuracy_after >= r.accuracy_before - 0.05 - 1e-12);
    const auto gb = fairness_gaps(r.baseline), gm = fairness_gaps(r.mitigated);
    for (int i = 0; i < kMetricCount; ++i)
      if (std::isfinite(gb(i)) && std::isfinite(gm(i))) CHECK(r.delta(i) == doctest::Approx(gb(i) - gm(i)));
    // The reported thresholds reproduce the mitigated vector.
    Vector th(fx.test.sensitive.size());
    for (Eigen::Index i = 0; i < th.size(); ++i)
      th(i) = fx.test.sensitive(i) ? r.threshold_privileged : r.threshold_unprivileged;
    const auto yhat = threshold_scores(predict_scores(fx.model, fx.test.features), th);
    const auto fv = fairness_vector(confusion_split(yhat, fx.test.labels, fx.test.sensitive));
    CHECK(fv.values(index_of(target)) == r.mitigated.values(index_of(target)));
    CHECK(accuracy(yhat, fx.test.labels) == r.accuracy_after);
  }
}

TEST_CASE("a strict accuracy floor leaves the baseline in place") {
  const Fixture fx = make_fixture(0.8, 4);
  MitigationOptions opt;
  opt.accuracy_floor = 1.01;
  const auto r = mitigate_thresholds(fx.model, fx.test, index_of(Metric::statistical_parity), opt);
  CHECK(r.noop);
  CHECK(r.threshold_privileged == 0.5);
  CHECK(r.threshold_unprivileged == 0.5);
  CHECK(r.delta(index_of(Metric::statistical_parity)) == 0.0);
}

TEST_CASE("an invalid target is rejected") {
  const Fixture fx = make_fixture(0.8, 5);
  CHECK_THROWS_AS(mitigate_thresholds(fx.model, fx.test, 16), std::invalid_argument);
  EvaluationSet one_group = fx.test;
  one_group.sensitive.setOnes();
  CHECK_THROWS_AS(mitigate_thresholds(fx.model, one_group, 0), std::invalid_argument);
}

TEST_CASE("propagation summary arithmetic") {
  Clustering c;
  c.tau = 0.5;
  c.clusters = {{0, {0, 1, 2, 3}}, {4, {4}}};
  Matrix corr = Matrix::Identity(5, 5);
  corr(0, 1) = corr(1, 0) = 0.9;
  corr(0, 2) = corr(2, 0) = 0.6;
  corr(0, 3) = corr(3, 0) = 0.7;
  MitigationReport r;
  r.target = 0;
  r.delta.setConstant(std::nan(""));
  r.delta(0) = 0.1;
  r.delta(1) = 0.08;   // ratio 0.8, |0.8 - 0.9| within band
  r.delta(2) = -0.02;  // wrong sign, ratio -0.2 outside band
  // member 3 undefined, excluded
  const auto s = propagation_check(corr, c, {r});
  CHECK(s.entries.size() == 3);
  CHECK(s.pairs == 2);
  CHECK(s.sign_agreement == doctest::Approx(0.5));
  CHECK(s.ratio_within_band == doctest::Approx(0.5));
  CHECK(s.entries[0].predicted == doctest::Approx(0.09));

  MitigationReport bad = r;
  bad.target = 1;
  CHECK_THROWS_AS(propagation_check(corr, c, {bad}), std::invalid_argument);

  MitigationReport none = r;
  none.delta(0) = 0.0;
  CHECK(propagation_check(corr, c, {none}).pairs == 0);
}

#include <cmath>

#include "doctest.h"
#include "fairrep/models.hpp"
#include "test_support.hpp"

using namespace fairrep;

namespace {
struct Data {
  Matrix x;
  BinaryVector y;
};
Data make_data(Eigen::Index n, std::uint64_t seed) {
  const Dataset ds = testing::synthetic_dataset(n, seed);
  return {ds.features, ds.label};
}
}  // namespace

TEST_CASE("logistic objective gradient matches finite differences") {
  const Data d = make_data(60, 1);
  const Vector y = d.y.cast<double>();
  LinearParams p;
  p.weights = Vector::LinSpaced(d.x.cols(), -0.4, 0.7);
  p.bias = 0.2;
  const double l2 = 1.3;
  const auto g = logistic_objective(d.x, y, p, l2);
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < p.weights.size(); ++j) {
    LinearParams a = p, b = p;
    a.weights(j) += h;
    b.weights(j) -= h;
    const double fd = (logistic_objective(d.x, y, a, l2).loss - logistic_objective(d.x, y, b, l2).loss) / (2 * h);
    CHECK(std::abs(fd - g.grad_weights(j)) < 1e-5);
  }
  LinearParams a = p, b = p;
  a.bias += h;
  b.bias -= h;
  const double fd = (logistic_objective(d.x, y, a, l2).loss - logistic_objective(d.x, y, b, l2).loss) / (2 * h);
  CHECK(std::abs(fd - g.grad_bias) < 1e-5);
}

TEST_CASE("every family learns the synthetic signal and is deterministic") {
  const Data d = make_data(400, 2);
  const Data t = make_data(300, 3);
  for (Family f : {Family::logit, Family::knn, Family::svm_linear, Family::random_forest, Family::mlp}) {
    CAPTURE(to_string(f));
    ModelSpec spec{f, {}, 17};
    const TrainedModel m = train(spec, d.x, d.y);
    const Vector s = predict_scores(m, t.x);
    CHECK((s.array() >= 0.0).all());
    CHECK((s.array() <= 1.0).all());
    const BinaryVector yhat = predict(m, t.x);
    for (Eigen::Index i = 0; i < s.size(); ++i) CHECK(yhat(i) == (s(i) >= 0.5 ? 1 : 0));
    CHECK(accuracy(m, t.x, t.y) > 0.75);
    const TrainedModel again = train(spec, d.x, d.y);
    CHECK(predict_scores(again, t.x) == s);
  }
}

TEST_CASE("single-class training data gives a constant model") {
  Data d = make_data(50, 4);
  d.y.setOnes();
  const TrainedModel m = train(ModelSpec{Family::logit, {}, 0}, d.x, d.y);
  CHECK(m.is_constant());
  CHECK((predict(m, d.x).array() == 1).all());
}

TEST_CASE("knn edge cases") {
  const Data d = make_data(30, 5);
  CHECK_THROWS_AS(train(ModelSpec{Family::knn, {{"k", "31"}}, 0}, d.x, d.y), std::invalid_argument);
  const TrainedModel one = train(ModelSpec{Family::knn, {{"k", "1"}}, 0}, d.x, d.y);
  CHECK(predict(one, d.x) == d.y);
}

TEST_CASE("a one-tree unbootstrapped forest is a plain CART tree") {
  const Data d = make_data(200, 6);
  const ModelSpec spec{Family::random_forest,
                       {{"trees", "1"}, {"bootstrap", "0"}, {"max_features", "3"}, {"max_depth", "inf"}},
                       3};
  const TrainedModel forest = train(spec, d.x, d.y);
  const DecisionTree tree = DecisionTree::fit(d.x, d.y.cast<double>(), DecisionTree::Options{});
  const Data t = make_data(100, 7);
  const Vector s = predict_scores(forest, t.x);
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) CHECK(s(i) == tree.score(t.x.row(i)));
  // An unlimited tree fits distinct training rows exactly.
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) CHECK(tree.score(d.x.row(i)) == d.y(i));
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS((ModelSpec{Family::logit, {{"k", "3"}}, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((ModelSpec{Family::knn, {{"k", "0"}}, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((ModelSpec{Family::random_forest, {{"bootstrap", "2"}}, 0}.validate()), ConfigError);
  CHECK_THROWS_AS(parse_family("tree"), ConfigError);
  CHECK(parse_family("rf") == Family::random_forest);
  const auto hp = ModelSpec::parse_hyperparameters("hidden=32:16, epochs=5");
  const ModelSpec mlp{Family::mlp, hp, 0};
  CHECK_NOTHROW(mlp.validate());
  CHECK(mlp.hidden_widths() == std::vector<int>{32, 16});
  CHECK(mlp.param("epochs", 50) == 5);
}

TEST_CASE("accuracy and thresholds") {
  BinaryVector a(4), b(4);
  a << 1, 0, 1, 1;
  b << 1, 1, 1, 0;
  CHECK(accuracy(a, b) == 0.5);
  CHECK_THROWS_AS(accuracy(BinaryVector(), BinaryVector()), std::invalid_argument);
  Vector s(3), th(3);
  s << 0.3, 0.5, 0.7;
  th << 0.3, 0.6, 0.8;
  BinaryVector expect(3);
  expect << 1, 0, 0;
  CHECK(threshold_scores(s, th) == expect);
}

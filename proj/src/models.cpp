#include "fairrep/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fairrep {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

const std::map<Family, std::set<std::string>>& known_keys() {
  static const std::map<Family, std::set<std::string>> keys{
      {Family::logit, {"l2", "epochs", "lr"}},
      {Family::svm_linear, {"C", "epochs", "lr"}},
      {Family::knn, {"k"}},
      {Family::random_forest, {"trees", "max_depth", "max_features", "bootstrap"}},
      {Family::mlp, {"hidden", "epochs", "lr", "batch"}},
  };
  return keys;
}

void check_training_input(const Matrix& features, const BinaryVector& labels) {
  if (features.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (features.rows() != labels.size()) throw std::invalid_argument("train: features/labels length mismatch");
  if (!features.allFinite()) throw std::invalid_argument("train: non-finite feature values");
  if ((labels.array() < 0).any() || (labels.array() > 1).any())
    throw std::invalid_argument("train: labels must be 0/1");
}

TrainedModel train_logit(const ModelSpec& spec, const Matrix& x, const Vector& y) {
  const double l2 = spec.param("l2", 1.0);
  const int epochs = static_cast<int>(spec.param("epochs", 200));
  const double lr = spec.param("lr", 0.1);
  LinearParams p{Vector::Zero(x.cols()), 0.0};
  int it = 0;
  bool converged = false;
  for (; it < epochs; ++it) {
    const auto g = logistic_objective(x, y, p, l2);
    if (std::sqrt(g.grad_weights.squaredNorm() + g.grad_bias * g.grad_bias) < 1e-6) {
      converged = true;
      break;
    }
    p.weights -= lr * g.grad_weights;
    p.bias -= lr * g.grad_bias;
  }
  return {Family::logit, std::move(p), x.cols(), it, converged};
}

// Primal hinge loss: mean(max(0, 1 - y' m)) + 1 / (2 C n) |w|^2, y' in {-1, +1}.
TrainedModel train_svm(const ModelSpec& spec, const Matrix& x, const Vector& y) {
  const double c = spec.param("C", 1.0);
  const int epochs = static_cast<int>(spec.param("epochs", 200));
  const double lr = spec.param("lr", 0.1);
  const auto n = static_cast<double>(x.rows());
  const Vector signs = 2.0 * y.array() - 1.0;
  LinearParams p{Vector::Zero(x.cols()), 0.0};
  bool converged = false;
  int it = 0;
  for (; it < epochs; ++it) {
    const Vector margin = signs.cwiseProduct(Vector((x * p.weights).array() + p.bias));
    const Vector active = (margin.array() < 1.0).cast<double>().matrix().cwiseProduct(signs);
    const Vector gw = -(x.transpose() * active) / n + p.weights / (c * n);
    const double gb = -active.sum() / n;
    if (std::sqrt(gw.squaredNorm() + gb * gb) < 1e-8) {
      converged = true;
      break;
    }
    p.weights -= lr * gw;
    p.bias -= lr * gb;
  }
  return {Family::svm_linear, std::move(p), x.cols(), it, converged};
}

struct AdamState {
  Matrix m, v;
  void init(Eigen::Index r, Eigen::Index c) {
    m.setZero(r, c);
    v.setZero(r, c);
  }
};

TrainedModel train_mlp(const ModelSpec& spec, const Matrix& x, const Vector& y) {
  const int epochs = static_cast<int>(spec.param("epochs", 50));
  const double lr = spec.param("lr", 0.01);
  const auto batch = static_cast<Eigen::Index>(spec.param("batch", 32));
  std::vector<Eigen::Index> widths{x.cols()};
  for (int w : spec.hidden_widths()) widths.push_back(w);
  widths.push_back(1);
  const std::size_t layers = widths.size() - 1;

  Rng rng(derive_seed(spec.seed, {0x4D4C50ULL}));
  MlpParams p;
  std::vector<AdamState> mw(layers), mb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const bool output = l + 1 == layers;
    const double scale = output ? std::sqrt(1.0 / static_cast<double>(widths[l]))
                                : std::sqrt(2.0 / static_cast<double>(widths[l]));
    Matrix w(widths[l], widths[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(widths[l + 1]));
    mw[l].init(widths[l], widths[l + 1]);
    mb[l].init(widths[l + 1], 1);
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Matrix> pre(layers), act(layers + 1);
  long step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < x.rows(); start += batch) {
      const Eigen::Index len = std::min(batch, x.rows() - start);
      IndexList rows(order.begin() + start, order.begin() + start + len);
      act[0] = x(rows, Eigen::all);
      for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = (act[l] * p.weights[l]).rowwise() + p.biases[l].transpose();
        act[l + 1] = l + 1 == layers ? Matrix(pre[l].unaryExpr([](double v) { return sigmoid(v); }))
                                     : Matrix(pre[l].cwiseMax(0.0));
      }
      Matrix delta = (act[layers] - y(rows)) / static_cast<double>(len);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = layers; l-- > 0;) {
        const Matrix gw = act[l].transpose() * delta;
        const Vector gb = delta.colwise().sum().transpose();
        if (l > 0) delta = (delta * p.weights[l].transpose()).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        auto update = [&](auto& param, AdamState& s, const auto& g) {
          s.m = beta1 * s.m + (1.0 - beta1) * g;
          s.v = beta2 * s.v + (1.0 - beta2) * g.cwiseProduct(g);
          param.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps);
        };
        update(p.weights[l], mw[l], gw);
        update(p.biases[l], mb[l], gb);
      }
    }
  }
  return {Family::mlp, std::move(p), x.cols(), epochs, false};
}

TrainedModel train_knn(const ModelSpec& spec, const Matrix& x, const Vector& y) {
  const int k = static_cast<int>(spec.param("k", 5));
  if (k > x.rows())
    throw std::invalid_argument("train: knn k=" + std::to_string(k) + " exceeds training size " +
                                std::to_string(x.rows()));
  return {Family::knn, KnnParams{x, y, k}, x.cols(), 0, true};
}

TrainedModel train_forest(const ModelSpec& spec, const Matrix& x, const Vector& y) {
  const int trees = static_cast<int>(spec.param("trees", 20));
  const double depth = spec.param("max_depth", 6);
  const bool bootstrap = spec.param("bootstrap", 1) != 0.0;
  DecisionTree::Options opt;
  opt.max_depth = std::isinf(depth) ? 0 : static_cast<int>(depth);
  opt.max_features = static_cast<int>(
      spec.param("max_features", std::max(1.0, std::floor(std::sqrt(static_cast<double>(x.cols()))))));
  if (opt.max_features >= x.cols()) opt.max_features = 0;

  ForestParams p;
  const auto n = static_cast<std::uint64_t>(x.rows());
  for (int t = 0; t < trees; ++t) {
    Rng rng(derive_seed(spec.seed, {0x52464FULL, static_cast<std::uint64_t>(t)}));
    IndexList rows(n);
    if (bootstrap)
      for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(n));
    else
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    p.trees.push_back(DecisionTree::fit(x, y, rows, opt, rng));
  }
  return {Family::random_forest, std::move(p), x.cols(), trees, true};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Family family) {
  switch (family) {
    case Family::logit: return "logit";
    case Family::knn: return "knn";
    case Family::svm_linear: return "svm_linear";
    case Family::random_forest: return "random_forest";
    case Family::mlp: return "mlp";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "logit" || name == "lr") return Family::logit;
  if (name == "knn") return Family::knn;
  if (name == "svm_linear" || name == "svm") return Family::svm_linear;
  if (name == "random_forest" || name == "rf") return Family::random_forest;
  if (name == "mlp" || name == "nn") return Family::mlp;
  throw ConfigError("unknown model family '" + name + "'");
}

double ModelSpec::param(const std::string& key, double fallback) const {
  const auto it = hyperparameters.find(key);
  if (it == hyperparameters.end()) return fallback;
  if (it->second == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("hyperparameter " + key + " is not numeric: '" + it->second + "'");
  }
}

std::vector<int> ModelSpec::hidden_widths() const {
  const auto it = hyperparameters.find("hidden");
  if (it == hyperparameters.end()) return {16};
  std::vector<int> widths;
  std::stringstream ss(it->second);
  std::string part;
  while (std::getline(ss, part, ':')) {
    try {
      const int w = std::stoi(part);
      if (w <= 0) throw std::invalid_argument(part);
      widths.push_back(w);
    } catch (const std::exception&) {
      throw ConfigError("hidden widths must be positive integers, got '" + it->second + "'");
    }
  }
  if (widths.empty()) throw ConfigError("hidden widths must not be empty");
  return widths;
}

void ModelSpec::validate() const {
  const auto& keys = known_keys().at(family);
  for (const auto& [key, value] : hyperparameters) {
    if (!keys.count(key)) throw ConfigError("hyperparameter '" + key + "' does not apply to " + to_string(family));
    if (key == "hidden") {
      hidden_widths();
      continue;
    }
    if (key == "bootstrap") {
      const double b = param(key, 1.0);
      if (b != 0.0 && b != 1.0) throw ConfigError("hyperparameter bootstrap must be 0 or 1");
      continue;
    }
    if (!(param(key, 1.0) > 0.0)) throw ConfigError("hyperparameter " + key + " must be strictly positive");
  }
}

std::map<std::string, std::string> ModelSpec::parse_hyperparameters(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string{};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
  };
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(item.substr(0, eq));
    const std::string value = eq == std::string::npos ? "" : trim(item.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("hyperparameter '" + item + "' is not key=value");
    out[key] = value;
  }
  return out;
}

LossGradient logistic_objective(const Matrix& x, const Vector& y, const LinearParams& params, double l2) {
  const auto n = static_cast<double>(x.rows());
  const Vector z = (x * params.weights).array() + params.bias;
  LossGradient out;
  // log(1 + exp(-z)) for y = 1, log(1 + exp(z)) for y = 0.
  for (Eigen::Index i = 0; i < z.size(); ++i) out.loss += softplus(y(i) > 0.5 ? -z(i) : z(i));
  out.loss = out.loss / n + 0.5 * l2 / n * params.weights.squaredNorm();
  const Vector residual = sigmoid(z) - y;
  out.grad_weights = x.transpose() * residual / n + l2 / n * params.weights;
  out.grad_bias = residual.sum() / n;
  return out;
}

TrainedModel train(const ModelSpec& spec, const Matrix& features, const BinaryVector& labels) {
  check_training_input(features, labels);
  spec.validate();
  const Eigen::Index positives = labels.sum();
  if (positives == 0 || positives == labels.size())
    return {spec.family, ConstantParams{positives == 0 ? 0.0 : 1.0}, features.cols(), 0, true};

  const Vector y = labels.cast<double>();
  switch (spec.family) {
    case Family::logit: return train_logit(spec, features, y);
    case Family::svm_linear: return train_svm(spec, features, y);
    case Family::mlp: return train_mlp(spec, features, y);
    case Family::knn: return train_knn(spec, features, y);
    case Family::random_forest: return train_forest(spec, features, y);
  }
  throw std::logic_error("unhandled family");
}

Vector predict_scores(const TrainedModel& model, const Matrix& features) {
  if (features.cols() != model.dims())
    throw std::invalid_argument("predict: expected " + std::to_string(model.dims()) + " features, got " +
                                std::to_string(features.cols()));
  const Eigen::Index n = features.rows();
  return std::visit(
      [&](const auto& p) -> Vector {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantParams>) {
          return Vector::Constant(n, p.score);
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          return sigmoid(Vector((features * p.weights).array() + p.bias));
        } else if constexpr (std::is_same_v<P, MlpParams>) {
          Matrix a = features;
          for (std::size_t l = 0; l < p.weights.size(); ++l) {
            Matrix z = (a * p.weights[l]).rowwise() + p.biases[l].transpose();
            a = l + 1 == p.weights.size() ? Matrix(z.unaryExpr([](double v) { return sigmoid(v); }))
                                        : Matrix(z.cwiseMax(0.0));
          }
          return a.col(0);
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          Vector out(n);
          std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(p.points.rows()));
          for (Eigen::Index i = 0; i < n; ++i) {
            const Vector d2 = (p.points.rowwise() - features.row(i)).rowwise().squaredNorm();
            for (Eigen::Index j = 0; j < d2.size(); ++j) dist[static_cast<std::size_t>(j)] = {d2(j), j};
            std::nth_element(dist.begin(), dist.begin() + (p.k - 1), dist.end());
            std::sort(dist.begin(), dist.begin() + p.k);
            double votes = 0.0;
            for (int j = 0; j < p.k; ++j) votes += p.labels(dist[static_cast<std::size_t>(j)].second);
            out(i) = votes / p.k;
          }
          return out;
        } else {
          Vector out = Vector::Zero(n);
          for (const auto& tree : p.trees)
            for (Eigen::Index i = 0; i < n; ++i) out(i) += tree.score(features.row(i));
          return out / static_cast<double>(p.trees.size());
        }
      },
      model.params());
}

BinaryVector threshold_scores(const Vector& scores, const Vector& thresholds) {
  if (scores.size() != thresholds.size()) throw std::invalid_argument("threshold_scores: length mismatch");
  return (scores.array() >= thresholds.array()).cast<int>();
}

BinaryVector predict(const TrainedModel& model, const Matrix& features) {
  return (predict_scores(model, features).array() >= 0.5).cast<int>();
}

double accuracy(const BinaryVector& predictions, const BinaryVector& labels) {
  if (labels.size() == 0) throw std::invalid_argument("accuracy: empty evaluation set");
  if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  return static_cast<double>((predictions.array() == labels.array()).count()) / static_cast<double>(labels.size());
}

double accuracy(const TrainedModel& model, const Matrix& features, const BinaryVector& labels) {
  if (labels.size() == 0) throw std::invalid_argument("accuracy: empty evaluation set");
  return accuracy(predict(model, features), labels);
}

// ---------------------------------------------------------------------------

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Vector& y, const DecisionTree::Options& options, Rng& rng,
              std::vector<TreeNode>& nodes)
      : x_(x), y_(y), opt_(options), rng_(rng), nodes_(nodes) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  int build(const IndexList& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double positives = 0.0;
    for (auto r : rows) positives += y_(r);
    const auto n = static_cast<double>(rows.size());
    nodes_[id].value = positives / n;
    const bool pure = positives == 0.0 || positives == n;
    if (pure || rows.size() < 2 || (opt_.max_depth > 0 && depth >= opt_.max_depth)) return id;

    const int candidates = opt_.max_features > 0 ? std::min<int>(opt_.max_features, static_cast<int>(x_.cols()))
                                                 : static_cast<int>(x_.cols());
    if (candidates < x_.cols()) {
      for (int i = 0; i < candidates; ++i)
        std::swap(features_[static_cast<std::size_t>(i)],
                  features_[static_cast<std::size_t>(i) + rng_.below(features_.size() - static_cast<std::size_t>(i))]);
    }
    std::vector<int> chosen(features_.begin(), features_.begin() + candidates);
    if (candidates < x_.cols()) std::sort(chosen.begin(), chosen.end());

    const double parent = n * gini(positives, n);
    double best_impurity = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, double>> column(rows.size());
    for (int f : chosen) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), y_(rows[i])};
      std::sort(column.begin(), column.end());
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_pos += column[i].second;
        if (!(column[i].first < column[i + 1].first)) continue;
        const auto nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double impurity = nl * gini(left_pos, nl) + nr * gini(positives - left_pos, nr);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          double mid = 0.5 * (column[i].first + column[i + 1].first);
          if (!(mid < column[i + 1].first)) mid = column[i].first;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    IndexList left, right;
    for (auto r : rows) (x_(r, best_feature) <= best_threshold ? left : right).push_back(r);
    const int l = build(left, depth + 1);
    const int rnode = build(right, depth + 1);
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    nodes_[id].left = l;
    nodes_[id].right = rnode;
    return id;
  }

 private:
  static double gini(double pos, double n) {
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  const Matrix& x_;
  const Vector& y_;
  DecisionTree::Options opt_;
  Rng& rng_;
  std::vector<TreeNode>& nodes_;
  std::vector<int> features_;
};

DecisionTree DecisionTree::fit(const Matrix& x, const Vector& y, const IndexList& rows, const Options& options,
                               Rng& rng) {
  if (rows.empty()) throw std::invalid_argument("DecisionTree::fit: no rows");
  DecisionTree tree;
  TreeBuilder(x, y, options, rng, tree.nodes_).build(rows, 0);
  return tree;
}

DecisionTree DecisionTree::fit(const Matrix& x, const Vector& y, const Options& options) {
  IndexList rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng rng(0);
  return fit(x, y, rows, options, rng);
}

double DecisionTree::score(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = row(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

}  // namespace fairrep

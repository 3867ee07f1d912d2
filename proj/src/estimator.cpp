#include "fairrep/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace fairrep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::uint64_t kSplitStream = 0;
constexpr std::uint64_t kSampleStream = 1;

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once, so results written to per-index slots are schedule-free.
template <typename Body>
void parallel_for(int count, unsigned threads, Body body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      try {
        for (int i = static_cast<int>(t); i < count; i += static_cast<int>(threads)) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  // Rational approximation (Acklam), relative error ~1e-9, then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425, high = 1.0 - low;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= high) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

Eigen::Index OracleConfig::resolve_t_size(std::size_t train_size) const {
  if (t_size) return *t_size;
  return std::min<Eigen::Index>(static_cast<Eigen::Index>(train_size), 2000);
}

void OracleConfig::validate() const {
  if (t_size && *t_size < 4) throw ConfigError("t_size must be at least 4");
  if (!(accept_threshold >= 0.0 && accept_threshold < 1.0))
    throw ConfigError("accept_threshold must lie in [0, 1)");
  if (max_attempts_per_sample < 1) throw ConfigError("max_attempts_per_sample must be positive");
}

void EstimatorConfig::validate() const {
  if (n_samples < 2) throw ConfigError("n_samples must be at least 2");
  if (n_iterations < 2) throw ConfigError("n_iterations must be at least 2");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) throw ConfigError("confidence_level must lie in (0, 1)");
  if (min_valid_pairs < 2) throw ConfigError("min_valid_pairs must be at least 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
}

EvaluationSet make_evaluation_set(const Dataset& dataset, const IndexList& rows) {
  return {dataset.features(rows, Eigen::all), dataset.label(rows), dataset.sensitive(rows)};
}

Eigen::Vector4d sample_ratios(Rng& rng) {
  Eigen::Vector4d u;
  do {
    for (int i = 0; i < 4; ++i) u(i) = rng.uniform();
  } while (!(u.sum() > 0.0));
  return u / u.sum();
}

IndexList bootstrap_training_set(const GroupPartition& partition, const Eigen::Vector4d& w, Eigen::Index t_size,
                                 Rng& rng) {
  Eigen::Vector4d weights = w;
  for (int g = 0; g < 4; ++g)
    if (partition.strata[static_cast<std::size_t>(g)].empty()) weights(g) = 0.0;
  const double total = weights.sum();
  if (!(total > 0.0)) {
    if (partition.total() == 0) throw std::invalid_argument("bootstrap_training_set: all strata are empty");
    // Every weighted stratum is empty: spread evenly over the populated ones.
    for (int g = 0; g < 4; ++g) weights(g) = partition.strata[static_cast<std::size_t>(g)].empty() ? 0.0 : 1.0;
  }
  weights /= weights.sum();

  IndexList out;
  out.reserve(static_cast<std::size_t>(t_size) + 4);
  for (int g = 0; g < 4; ++g) {
    const auto& stratum = partition.strata[static_cast<std::size_t>(g)];
    if (stratum.empty()) continue;
    const auto count = static_cast<long>(std::lround(weights(g) * static_cast<double>(t_size)));
    for (long j = 0; j < count; ++j) out.push_back(stratum[rng.below(stratum.size())]);
  }
  return out;
}

OracleSample sampling_oracle(const GroupPartition& partition, const Dataset& dataset, const ModelSpec& spec,
                             const OracleConfig& config, const EvaluationSet& test, Rng& rng) {
  const Eigen::Vector4d w = sample_ratios(rng);
  const IndexList rows =
      bootstrap_training_set(partition, w, config.resolve_t_size(partition.total()), rng);
  ModelSpec sample_spec = spec;
  sample_spec.seed = rng.next();
  const TrainedModel model = train(sample_spec, dataset.features(rows, Eigen::all), dataset.label(rows));
  const BinaryVector predictions = predict(model, test.features);
  OracleSample out;
  out.accuracy = accuracy(predictions, test.labels);
  out.fairness = fairness_vector(confusion_split(predictions, test.labels, test.sensitive));
  return out;
}

OracleSample sampling_oracle(const GroupPartition& partition, const Dataset& dataset, const ModelSpec& spec,
                             const OracleConfig& config, const IndexList& test, Rng& rng) {
  if (test.empty()) throw std::invalid_argument("sampling_oracle: empty test set");
  return sampling_oracle(partition, dataset, spec, config, make_evaluation_set(dataset, test), rng);
}

PairwiseCorrelation pairwise_pearson(const std::vector<OracleSample>& rows, int min_valid_pairs) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::Matrix<double, Eigen::Dynamic, kMetricCount> values(n, kMetricCount);
  Eigen::Array<bool, Eigen::Dynamic, kMetricCount> valid(n, kMetricCount);
  for (Eigen::Index k = 0; k < n; ++k) {
    values.row(k) = rows[static_cast<std::size_t>(k)].fairness.values.transpose();
    valid.row(k) = rows[static_cast<std::size_t>(k)].fairness.valid.transpose().array();
  }
  PairwiseCorrelation out{Matrix::Constant(kMetricCount, kMetricCount, kNaN),
                          Eigen::MatrixXi::Zero(kMetricCount, kMetricCount)};
  for (int i = 0; i < kMetricCount; ++i)
    for (int j = i; j < kMetricCount; ++j) {
      const auto joint = (valid.col(i) && valid.col(j)).eval();
      const int support = static_cast<int>(joint.count());
      out.support(i, j) = out.support(j, i) = support;
      if (support < min_valid_pairs) continue;
      if (const auto r = pearson(values.col(i), values.col(j), joint)) out.r(i, j) = out.r(j, i) = i == j ? 1.0 : *r;
    }
  return out;
}

CorrelationEstimate corr_estimate(const Dataset& dataset, const ModelSpec& spec, const OracleConfig& oracle,
                                  const EstimatorConfig& config) {
  oracle.validate();
  config.validate();
  spec.validate();
  for (int s = 0; s < 2; ++s)
    if ((dataset.sensitive.array() == s).count() == 0)
      throw ConfigError("dataset has no rows with S=" + std::to_string(s));
  for (int y = 0; y < 2; ++y)
    if ((dataset.label.array() == y).count() == 0) throw ConfigError("dataset has no rows with Y=" + std::to_string(y));

  const int n = config.n_samples;
  const int min_rows = (n + 1) / 2;
  CorrelationEstimate est;

  for (int iter = 0; iter < config.n_iterations; ++iter) {
    bool done = false;
    for (int retry = 0; retry < 3 && !done; ++retry) {
      const auto it = static_cast<std::uint64_t>(iter), rt = static_cast<std::uint64_t>(retry);
      const Split parts = split(dataset, {config.test_fraction, derive_seed(config.seed, {kSplitStream, it, rt})});
      const EvaluationSet test = make_evaluation_set(dataset, parts.test);
      if ((test.sensitive.array() == 0).count() == 0 || (test.sensitive.array() == 1).count() == 0)
        throw EstimationError("test split lacks one sensitive group; the dataset is too small or degenerate");
      const GroupPartition partition = partition_groups(dataset, parts.train);

      std::vector<std::optional<OracleSample>> slots(static_cast<std::size_t>(n));
      std::vector<int> attempts(static_cast<std::size_t>(n), 0);
      parallel_for(n, config.threads, [&](int k) {
        for (int a = 0; a < oracle.max_attempts_per_sample; ++a) {
          Rng rng(derive_seed(config.seed, {kSampleStream, it, rt, static_cast<std::uint64_t>(k),
                                            static_cast<std::uint64_t>(a)}));
          ++attempts[static_cast<std::size_t>(k)];
          OracleSample sample = sampling_oracle(partition, dataset, spec, oracle, test, rng);
          if (sample.accuracy >= oracle.accept_threshold) {
            slots[static_cast<std::size_t>(k)] = std::move(sample);
            return;
          }
        }
      });

      FairnessSampleTable table;
      table.iteration = iter;
      for (int k = 0; k < n; ++k) {
        table.attempts += attempts[static_cast<std::size_t>(k)];
        if (slots[static_cast<std::size_t>(k)]) {
          table.rejected += attempts[static_cast<std::size_t>(k)] - 1;
          table.rows.push_back(std::move(*slots[static_cast<std::size_t>(k)]));
        } else {
          table.rejected += attempts[static_cast<std::size_t>(k)];
          ++table.shortfall;
        }
      }
      if (static_cast<int>(table.rows.size()) < min_rows) {
        ++est.aborted_iterations;
        std::ostringstream msg;
        msg << "iteration " << iter << " accepted " << table.rows.size() << " of " << n << " samples ("
            << table.rejected << " rejected of " << table.attempts << " attempts, accept threshold "
            << oracle.accept_threshold << ")";
        if (retry == 2) throw EstimationError(msg.str() + "; aborting after 3 consecutive failures");
        warn(msg.str() + "; redrawing the iteration");
        continue;
      }
      auto corr = pairwise_pearson(table.rows, config.min_valid_pairs);
      est.support = est.tables.empty() ? corr.support : est.support.cwiseMin(corr.support).eval();
      est.per_iteration.push_back(std::move(corr.r));
      est.tables.push_back(std::move(table));
      done = true;
    }
  }

  const auto L = static_cast<Eigen::Index>(est.per_iteration.size());
  est.mean = Matrix::Constant(kMetricCount, kMetricCount, kNaN);
  est.conf_error = Matrix::Constant(kMetricCount, kMetricCount, kNaN);
  for (int i = 0; i < kMetricCount; ++i)
    for (int j = i; j < kMetricCount; ++j) {
      Vector r(L);
      for (Eigen::Index l = 0; l < L; ++l) r(l) = est.per_iteration[static_cast<std::size_t>(l)](i, j);
      if (!r.allFinite()) continue;
      est.mean(i, j) = est.mean(j, i) = i == j ? 1.0 : r.mean();
      est.conf_error(i, j) = est.conf_error(j, i) = confidence_error(r, config.confidence_level);
    }
  return est;
}

}  // namespace fairrep

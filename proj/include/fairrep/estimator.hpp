#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fairrep/fairmetrics.hpp"
#include "fairrep/ingest.hpp"
#include "fairrep/models.hpp"
#include "fairrep/types.hpp"

namespace fairrep {

// ---------------------------------------------------------------------------
// Statistics primitives

/// Pearson correlation over the entries where `valid` is nonzero, computed in
/// one pass with running co-moments. Undefined (nullopt) with fewer than two
/// jointly valid entries or when either side has zero variance.
template <typename DerivedX, typename DerivedY, typename DerivedMask>
std::optional<double> pearson(const Eigen::DenseBase<DerivedX>& x, const Eigen::DenseBase<DerivedY>& y,
                              const Eigen::DenseBase<DerivedMask>& valid) {
  eigen_assert(x.size() == y.size() && x.size() == valid.size());
  double mean_x = 0.0, mean_y = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!valid(i)) continue;
    ++n;
    const double xi = x(i), yi = y(i);
    const double dx = xi - mean_x, dy = yi - mean_y;
    mean_x += dx / static_cast<double>(n);
    mean_y += dy / static_cast<double>(n);
    sxx += dx * (xi - mean_x);
    syy += dy * (yi - mean_y);
    sxy += dx * (yi - mean_y);
  }
  if (n < 2 || !(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

template <typename DerivedX, typename DerivedY>
std::optional<double> pearson(const Eigen::DenseBase<DerivedX>& x, const Eigen::DenseBase<DerivedY>& y) {
  return pearson(x, y, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(x.size(), true));
}

/// Inverse of the standard normal CDF for p in (0, 1).
double normal_quantile(double p);

/// Half-width of the normal-approximation interval on the mean of `values`:
/// z(1 - alpha/2) * s / sqrt(L), alpha = 1 - confidence_level, s the sample
/// standard deviation. Throws std::invalid_argument when L < 2.
template <typename Derived>
double confidence_error(const Eigen::DenseBase<Derived>& values, double confidence_level) {
  const auto count = values.size();
  if (count < 2) throw std::invalid_argument("confidence_error: need at least two values");
  if (!(confidence_level > 0.0 && confidence_level < 1.0))
    throw std::invalid_argument("confidence_error: confidence level must lie in (0, 1)");
  const double mean = values.derived().mean();
  const double ss = (values.derived().array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(count - 1));
  const double z = normal_quantile(1.0 - (1.0 - confidence_level) / 2.0);
  return z * sd / std::sqrt(static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Sampling oracle

struct OracleConfig {
  /// Bootstrap training size; unset means |train| capped at 2000.
  std::optional<Eigen::Index> t_size;
  /// Models with test accuracy below this are rejected.
  double accept_threshold = 0.5;
  int max_attempts_per_sample = 20;

  Eigen::Index resolve_t_size(std::size_t train_size) const;
  void validate() const;
};

/// Test rows gathered once and reused across oracle calls.
struct EvaluationSet {
  Matrix features;
  BinaryVector labels;
  BinaryVector sensitive;
};
EvaluationSet make_evaluation_set(const Dataset& dataset, const IndexList& rows);

struct OracleSample {
  double accuracy = 0.0;
  FairnessVector fairness;
};

/// Four stratum ratios u_i / sum(u), u_i ~ Uniform(0, 1).
Eigen::Vector4d sample_ratios(Rng& rng);

/// round(w_i * t_size) draws with replacement from each stratum. Empty strata
/// have their weight removed and the rest renormalized. Throws
/// std::invalid_argument when every stratum is empty.
IndexList bootstrap_training_set(const GroupPartition& partition, const Eigen::Vector4d& w, Eigen::Index t_size,
                                 Rng& rng);

/// One oracle call: random ratios, bootstrap, train, evaluate accuracy and the
/// sixteen metrics on the fixed test rows. Model randomness is drawn from rng.
OracleSample sampling_oracle(const GroupPartition& partition, const Dataset& dataset, const ModelSpec& spec,
                             const OracleConfig& config, const EvaluationSet& test, Rng& rng);
OracleSample sampling_oracle(const GroupPartition& partition, const Dataset& dataset, const ModelSpec& spec,
                             const OracleConfig& config, const IndexList& test, Rng& rng);

// ---------------------------------------------------------------------------
// Correlation estimate

struct EstimatorConfig {
  int n_samples = 1000;
  int n_iterations = 30;
  double confidence_level = 0.95;
  int min_valid_pairs = 30;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  /// Worker threads for oracle calls; results do not depend on it.
  unsigned threads = 1;

  void validate() const;
};

struct FairnessSampleTable {
  int iteration = 0;
  std::vector<OracleSample> rows;
  long attempts = 0;
  long rejected = 0;
  /// Samples whose every attempt was rejected.
  long shortfall = 0;
};

/// Correlation matrix with pairwise deletion: entry (i, j) uses the rows where
/// both metrics are valid. NaN where fewer than `min_valid_pairs` rows remain
/// or a side is constant.
struct PairwiseCorrelation {
  Matrix r;
  Eigen::MatrixXi support;
};
PairwiseCorrelation pairwise_pearson(const std::vector<OracleSample>& rows, int min_valid_pairs);

struct CorrelationEstimate {
  Matrix mean;                     ///< NaN marks an undefined entry
  Matrix conf_error;               ///< NaN where mean is undefined
  Eigen::MatrixXi support;         ///< minimum over iterations
  std::vector<Matrix> per_iteration;
  std::vector<FairnessSampleTable> tables;
  int aborted_iterations = 0;

  bool defined(Eigen::Index i, Eigen::Index j) const { return std::isfinite(mean(i, j)); }
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monte-Carlo correlation estimate over L iterations of N accepted oracle
/// samples each. Every iteration draws a fresh split and partition; a sample
/// is retried with a fresh bootstrap until accepted or max attempts. An
/// iteration with fewer than ceil(N/2) accepted rows is redrawn; three
/// consecutive failures raise EstimationError. An entry is defined only if it
/// is defined in every iteration. Bit-identical for a fixed seed regardless of
/// `threads`.
CorrelationEstimate corr_estimate(const Dataset& dataset, const ModelSpec& spec, const OracleConfig& oracle,
                                  const EstimatorConfig& config);

}  // namespace fairrep

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairrep/clustering.hpp"
#include "fairrep/estimator.hpp"
#include "fairrep/fairmetrics.hpp"
#include "fairrep/models.hpp"

namespace fairrep {

using MetricVector = Eigen::Matrix<double, kMetricCount, 1>;

/// Per-metric fairness gaps; NaN where the metric is invalid.
MetricVector fairness_gaps(const FairnessVector& fv);

struct MitigationOptions {
  /// Candidate thresholds for each group; defaults to 0.05, 0.10, ..., 0.95.
  std::vector<double> grid = default_grid();
  /// Minimum accuracy of a candidate; defaults to baseline accuracy - 0.05.
  std::optional<double> accuracy_floor;

  static std::vector<double> default_grid();
};

struct MitigationReport {
  int target = 0;
  FairnessVector baseline;
  FairnessVector mitigated;
  /// gap(baseline) - gap(mitigated); positive means the metric became fairer.
  MetricVector delta;
  double threshold_unprivileged = 0.5;
  double threshold_privileged = 0.5;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  bool noop = false;
  std::string note;

  double target_reduction() const { return delta(target); }
};

/// Group-specific decision thresholds on the model's scores: grid search over
/// (theta_0, theta_1) for the smallest gap of `target` with accuracy at or above
/// the floor. The shared 0.5 threshold is always a candidate, so the target
/// gap never grows. Returns the baseline flagged noop when the baseline is
/// already fair or no grid point clears the floor. Throws std::invalid_argument
/// if the target metric is invalid at baseline.
MitigationReport mitigate_thresholds(const TrainedModel& model, const EvaluationSet& test, int target,
                                     const MitigationOptions& options = {});

struct PropagationEntry {
  int pivot = 0;
  int member = 0;
  double correlation = 0.0;  ///< r*(pivot, member)
  double epsilon = 0.0;      ///< pivot gap reduction
  double delta = 0.0;        ///< member gap reduction
  double predicted = 0.0;    ///< correlation * epsilon
  double ratio = 0.0;        ///< delta / epsilon
  bool sign_agree = false;   ///< member gap shrank
  bool included = false;     ///< epsilon > 0 and delta defined
};

struct PropagationSummary {
  std::vector<PropagationEntry> entries;
  int pairs = 0;  ///< included entries
  double sign_agreement = 0.0;
  /// Fraction of included entries with |ratio - correlation| <= 0.5.
  double ratio_within_band = 0.0;
};

/// Compares each mitigated pivot's gap reduction with the reductions seen on
/// the members of its cluster. Pure function of its inputs. Throws
/// std::invalid_argument for a report whose target is not a pivot.
PropagationSummary propagation_check(const CorrelationMatrix& mean, const Clustering& clustering,
                                     const std::vector<MitigationReport>& reports);

}  // namespace fairrep

#include "fairrep/mitigate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairrep {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

MetricVector fairness_gaps(const FairnessVector& fv) {
  MetricVector out;
  for (int i = 0; i < kMetricCount; ++i) out(i) = fv.valid(i) ? fairness_gap(i, fv.values(i)) : kNaN;
  return out;
}

std::vector<double> MitigationOptions::default_grid() {
  std::vector<double> grid;
  for (int i = 1; i < 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

MitigationReport mitigate_thresholds(const TrainedModel& model, const EvaluationSet& test, int target,
                                     const MitigationOptions& options) {
  if (target < 0 || target >= kMetricCount) throw std::invalid_argument("mitigate_thresholds: bad target");
  const Vector scores = predict_scores(model, test.features);
  const Vector is_privileged = test.sensitive.cast<double>();

  auto evaluate = [&](double t0, double t1, double& acc) {
    const Vector thresholds = t0 + (t1 - t0) * is_privileged.array();
    const BinaryVector pred = threshold_scores(scores, thresholds);
    acc = accuracy(pred, test.labels);
    return fairness_vector(confusion_split(pred, test.labels, test.sensitive));
  };

  MitigationReport report;
  report.target = target;
  report.baseline = evaluate(0.5, 0.5, report.accuracy_before);
  if (!report.baseline.valid(target))
    throw std::invalid_argument("mitigate_thresholds: target metric " + metric_label(target) +
                                " is undefined at baseline");
  report.mitigated = report.baseline;
  report.accuracy_after = report.accuracy_before;
  report.delta = MetricVector::Zero();
  const MetricVector base_gaps = fairness_gaps(report.baseline);
  for (int i = 0; i < kMetricCount; ++i)
    if (std::isnan(base_gaps(i))) report.delta(i) = kNaN;

  const double base_gap = base_gaps(target);
  if (base_gap == 0.0) {
    report.noop = true;
    report.note = "baseline already fair on target";
    return report;
  }

  const double floor = options.accuracy_floor.value_or(report.accuracy_before - 0.05);
  bool found = false;
  double best_gap = 0.0, best_dist = 0.0, best_acc = 0.0;
  for (double t0 : options.grid)
    for (double t1 : options.grid) {
      double acc = 0.0;
      const FairnessVector fv = evaluate(t0, t1, acc);
      if (acc < floor || !fv.valid(target)) continue;
      const double gap = fairness_gap(target, fv.values(target));
      if (gap > base_gap) continue;
      const double dist = std::abs(t0 - 0.5) + std::abs(t1 - 0.5);
      const bool better = !found || gap < best_gap ||
                          (gap == best_gap && (dist < best_dist || (dist == best_dist && acc > best_acc)));
      if (!better) continue;
      found = true;
      best_gap = gap;
      best_dist = dist;
      best_acc = acc;
      report.mitigated = fv;
      report.accuracy_after = acc;
      report.threshold_unprivileged = t0;
      report.threshold_privileged = t1;
    }
  if (!found) {
    report.noop = true;
    report.note = "no threshold pair meets the accuracy floor";
    return report;
  }
  report.delta = base_gaps - fairness_gaps(report.mitigated);
  return report;
}

PropagationSummary propagation_check(const CorrelationMatrix& mean, const Clustering& clustering,
                                     const std::vector<MitigationReport>& reports) {
  PropagationSummary summary;
  int agree = 0, in_band = 0;
  for (const auto& report : reports) {
    const Cluster* cluster = nullptr;
    for (const auto& c : clustering.clusters)
      if (c.pivot == report.target) cluster = &c;
    if (!cluster) throw std::invalid_argument("propagation_check: report target is not a pivot");
    const double eps = report.delta(report.target);
    for (std::size_t m = 1; m < cluster->members.size(); ++m) {
      PropagationEntry e;
      e.pivot = cluster->pivot;
      e.member = cluster->members[m];
      e.correlation = mean(e.pivot, e.member);
      e.epsilon = eps;
      e.delta = report.delta(e.member);
      e.predicted = e.correlation * eps;
      e.included = eps > 0.0 && std::isfinite(e.delta);
      e.ratio = e.included ? e.delta / eps : kNaN;
      e.sign_agree = e.included && e.delta > 0.0;
      if (e.included) {
        ++summary.pairs;
        agree += e.sign_agree;
        in_band += std::abs(e.ratio - e.correlation) <= 0.5;
      }
      summary.entries.push_back(e);
    }
  }
  if (summary.pairs > 0) {
    summary.sign_agreement = static_cast<double>(agree) / summary.pairs;
    summary.ratio_within_band = static_cast<double>(in_band) / summary.pairs;
  }
  return summary;
}

}  // namespace fairrep

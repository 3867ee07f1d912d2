#include "fairrep/fairmetrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairrep {

namespace {

constexpr std::array<std::string_view, kMetricCount> kNames{
    "equalized_odds",       "error_difference",   "error_ratio",        "discovery_difference",
    "discovery_ratio",      "predictive_equality", "fpr_ratio",          "for_difference",
    "for_ratio",            "disparate_impact",   "statistical_parity", "equal_opportunity",
    "fnr_difference",       "fnr_ratio",          "average_odds_difference", "predictive_parity",
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A rate that may be undefined.
struct Rate {
  double value = kNaN;
  bool ok = false;
};

Rate rate(std::int64_t num, std::int64_t den) {
  if (den == 0) return {};
  return {static_cast<double>(num) / static_cast<double>(den), true};
}

Rate diff(Rate a, Rate b) {
  if (!a.ok || !b.ok) return {};
  return {a.value - b.value, true};
}

Rate ratio(Rate a, Rate b) {
  if (!a.ok || !b.ok || b.value == 0.0) return {};
  return {a.value / b.value, true};
}

}  // namespace

std::string metric_label(int index) { return "f" + std::to_string(index + 1); }

std::string_view metric_name(int index) { return kNames.at(static_cast<std::size_t>(index)); }

MetricKind metric_kind(int index) {
  switch (index + 1) {
    case 1: return MetricKind::absolute;
    case 3: case 5: case 7: case 9: case 10: case 14: return MetricKind::ratio;
    default: return MetricKind::difference;
  }
}

int parse_metric(std::string_view text) {
  for (int i = 0; i < kMetricCount; ++i)
    if (text == kNames[static_cast<std::size_t>(i)] || text == metric_label(i) || text == std::to_string(i + 1))
      return i;
  throw ConfigError("unknown fairness metric '" + std::string(text) + "'");
}

double fairness_gap(int index, double value) {
  return metric_kind(index) == MetricKind::ratio ? std::abs(value - 1.0) : std::abs(value);
}

double ConfusionSplit::accuracy() const {
  const auto n = total();
  if (n == 0) return kNaN;
  return static_cast<double>(group[0].tp + group[0].tn + group[1].tp + group[1].tn) / static_cast<double>(n);
}

ConfusionSplit confusion_split(const BinaryVector& predictions, const BinaryVector& labels,
                               const BinaryVector& sensitive) {
  if (predictions.size() != labels.size() || labels.size() != sensitive.size())
    throw std::invalid_argument("confusion_split: length mismatch");
  if (labels.size() == 0) throw std::invalid_argument("confusion_split: empty input");
  ConfusionSplit cs;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    auto& g = cs.group[sensitive(i) != 0];
    const bool y = labels(i) != 0, yhat = predictions(i) != 0;
    if (y && yhat) ++g.tp;
    else if (!y && yhat) ++g.fp;
    else if (y) ++g.fn;
    else ++g.tn;
  }
  return cs;
}

FairnessVector fairness_vector(const ConfusionSplit& cs) {
  const auto& u = cs.group[0];  // unprivileged
  const auto& p = cs.group[1];  // privileged
  FairnessVector out;
  out.values.setConstant(kNaN);
  out.valid.setConstant(false);
  if (u.n() == 0 || p.n() == 0) return out;

  const Rate fpr0 = rate(u.fp, u.fp + u.tn), fpr1 = rate(p.fp, p.fp + p.tn);
  const Rate tpr0 = rate(u.tp, u.tp + u.fn), tpr1 = rate(p.tp, p.tp + p.fn);
  const Rate fnr0 = rate(u.fn, u.fn + u.tp), fnr1 = rate(p.fn, p.fn + p.tp);
  const Rate fdr0 = rate(u.fp, u.tp + u.fp), fdr1 = rate(p.fp, p.tp + p.fp);
  const Rate for0 = rate(u.fn, u.tn + u.fn), for1 = rate(p.fn, p.tn + p.fn);
  const Rate ppv0 = rate(u.tp, u.tp + u.fp), ppv1 = rate(p.tp, p.tp + p.fp);
  const Rate pos0 = rate(u.tp + u.fp, u.n()), pos1 = rate(p.tp + p.fp, p.n());
  // Error difference keeps the pooled N0 + N1 denominator for both groups.
  const std::int64_t pooled = u.n() + p.n();
  const Rate err0 = rate(u.fp + u.fn, pooled), err1 = rate(p.fp + p.fn, pooled);

  const Rate pe = diff(fpr0, fpr1);
  const Rate eo = diff(tpr0, tpr1);
  std::array<Rate, kMetricCount> m;
  m[0] = pe.ok && eo.ok ? Rate{0.5 * (std::abs(pe.value) + std::abs(eo.value)), true} : Rate{};
  m[1] = diff(err0, err1);
  // Error ratio: the published denominator FP1 + FN0 is read as FP1 + FN1, the
  // privileged group's error count; the pooled N0 + N1 factors cancel.
  m[2] = ratio(rate(u.fp + u.fn, 1), rate(p.fp + p.fn, 1));
  m[3] = diff(fdr0, fdr1);
  m[4] = ratio(fdr0, fdr1);
  m[5] = pe;
  m[6] = ratio(fpr0, fpr1);
  m[7] = diff(for0, for1);
  m[8] = ratio(for0, for1);
  m[9] = ratio(pos0, pos1);
  m[10] = diff(pos0, pos1);
  m[11] = eo;
  m[12] = diff(fnr0, fnr1);
  m[13] = ratio(fnr0, fnr1);
  m[14] = pe.ok && eo.ok ? Rate{0.5 * (pe.value + eo.value), true} : Rate{};
  m[15] = diff(ppv0, ppv1);

  for (int i = 0; i < kMetricCount; ++i) {
    out.values(i) = m[static_cast<std::size_t>(i)].value;
    out.valid(i) = m[static_cast<std::size_t>(i)].ok;
  }
  return out;
}

}  // namespace fairrep

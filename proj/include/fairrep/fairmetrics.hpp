#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "fairrep/types.hpp"

namespace fairrep {

inline constexpr int kMetricCount = 16;

/// Stable metric order f1..f16; part of every report's column layout.
enum class Metric : int {
  equalized_odds,         // f1
  error_difference,       // f2
  error_ratio,            // f3
  discovery_difference,   // f4
  discovery_ratio,        // f5
  predictive_equality,    // f6
  fpr_ratio,              // f7
  for_difference,         // f8
  for_ratio,              // f9
  disparate_impact,       // f10
  statistical_parity,     // f11
  equal_opportunity,      // f12
  fnr_difference,         // f13
  fnr_ratio,              // f14
  average_odds_difference,  // f15
  predictive_parity,      // f16
};

enum class MetricKind { absolute, difference, ratio };

constexpr int index_of(Metric m) { return static_cast<int>(m); }

/// "f1".."f16".
std::string metric_label(int index);
/// "equalized_odds" .. "predictive_parity".
std::string_view metric_name(int index);
MetricKind metric_kind(int index);
/// Accepts "f12", "12" or "equal_opportunity"; returns the 0-based index or throws ConfigError.
int parse_metric(std::string_view text);

/// Unfairness magnitude: |v| for f1 and difference metrics, |v - 1| for ratios.
double fairness_gap(int index, double value);

struct GroupCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t n() const { return tp + fp + fn + tn; }
};

/// Confusion matrix split by sensitive group; group[1] is privileged.
struct ConfusionSplit {
  std::array<GroupCounts, 2> group;

  std::int64_t total() const { return group[0].n() + group[1].n(); }
  double accuracy() const;
  /// Same counts with the group roles exchanged.
  ConfusionSplit swapped() const { return {{group[1], group[0]}}; }
};

struct FairnessVector {
  Eigen::Matrix<double, kMetricCount, 1> values;
  Eigen::Matrix<bool, kMetricCount, 1> valid;

  double operator[](int i) const { return values(i); }
  double operator[](Metric m) const { return values(index_of(m)); }
  bool is_valid(Metric m) const { return valid(index_of(m)); }
};

/// Tallies each row into one of the eight (S, Y, Yhat) cells. Throws
/// std::invalid_argument on length mismatch or empty input.
ConfusionSplit confusion_split(const BinaryVector& predictions, const BinaryVector& labels,
                               const BinaryVector& sensitive);

/// All sixteen metrics as group-0 minus group-1 differences or group-0 over
/// group-1 ratios. A metric whose formula divides by zero is flagged invalid
/// (value NaN); no exceptions.
FairnessVector fairness_vector(const ConfusionSplit& cs);

}  // namespace fairrep

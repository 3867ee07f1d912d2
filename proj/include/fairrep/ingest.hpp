#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairrep/types.hpp"

namespace fairrep {

/// How to turn a delimited file into a binary-group, binary-label dataset.
///
/// The sensitive attribute maps to 1 (privileged) when the cell equals
/// `privileged_value`, or, for numeric attributes, when it is at least
/// `privileged_min`. If `unprivileged_value` is set, rows matching neither
/// value are filtered out; otherwise the column must hold at most two distinct
/// values. The label is reduced the same way through `favorable_value` /
/// `favorable_min` / `unfavorable_value`.
struct Schema {
  std::string name;
  std::filesystem::path data_file;
  char delimiter = ',';

  std::string sensitive_col;
  std::optional<std::string> privileged_value;
  std::optional<double> privileged_min;
  std::optional<std::string> unprivileged_value;

  std::string label_col;
  std::optional<std::string> favorable_value;
  std::optional<double> favorable_min;
  std::optional<std::string> unfavorable_value;

  std::vector<std::string> drop_cols;
  std::vector<std::string> categorical_cols;
  std::vector<std::string> missing_values{"", "?", "NA", "NaN", "nan"};
  bool sensitive_as_feature = true;
};

/// Parses a `key = value` schema file. Relative `file` entries resolve
/// against the schema's own directory. Throws ConfigError.
Schema parse_schema_file(const std::filesystem::path& path);
Schema parse_schema(const std::string& text, const std::filesystem::path& base_dir = {});

/// Names of the built-in presets (compas, adult, german, bank).
const std::vector<std::string>& preset_names();

/// Loads `<data_dir>/schemas/<name>.schema`.
Schema preset_schema(const std::string& name,
                     const std::filesystem::path& data_dir = FAIRREP_DATA_DIR);

struct Dataset {
  std::string name;
  Matrix features;          ///< n x d; one-hot categoricals, z-normalized numerics
  BinaryVector sensitive;   ///< 1 = privileged
  BinaryVector label;       ///< 1 = favorable
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;   ///< rows with missing values in used columns
  std::size_t filtered_rows = 0;  ///< rows outside the two schema groups/labels

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dims() const { return features.cols(); }
};

/// Reads and encodes a dataset. Throws ConfigError for a missing file, an
/// absent schema column, or a sensitive/label column that does not reduce to
/// two values.
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);
Dataset load_dataset(const Schema& schema);

/// Rows of `dataset` at `rows`, as a new dataset (features are not re-normalized).
Dataset select_rows(const Dataset& dataset, const IndexList& rows);

/// Uniform subsample without replacement of `n` rows, deterministic in `seed`.
Dataset subsample(const Dataset& dataset, Eigen::Index n, std::uint64_t seed);

struct SplitConfig {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct Split {
  IndexList train;
  IndexList test;
};

/// Stratum position of a (sensitive, label) pair: g00, g01, g10, g11.
constexpr int stratum_of(int sensitive, int label) { return 2 * sensitive + label; }

/// Stratified train/test split by (S, Y). |test| = round(test_fraction * n);
/// a stratum with at least two members lands on both sides. Both lists are
/// sorted.
Split split(const Dataset& dataset, const SplitConfig& config);

struct GroupPartition {
  std::array<IndexList, 4> strata;  ///< g00, g01, g10, g11

  std::size_t total() const;
  bool has_empty_stratum() const;
};

/// Assigns each training index to its (S, Y) stratum. Empty strata are
/// permitted and reported through warn().
GroupPartition partition_groups(const Dataset& dataset, const IndexList& train);

}  // namespace fairrep

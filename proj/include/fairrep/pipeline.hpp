#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairrep/clustering.hpp"
#include "fairrep/estimator.hpp"
#include "fairrep/ingest.hpp"
#include "fairrep/mitigate.hpp"
#include "fairrep/models.hpp"

namespace fairrep {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  /// Preset name, or empty when schema_path is given.
  std::string dataset;
  std::filesystem::path schema_path;
  /// Overrides the schema's data file.
  std::filesystem::path data_path;
  std::filesystem::path data_dir = FAIRREP_DATA_DIR;
  /// Row subsample applied after loading.
  std::optional<Eigen::Index> subsample;

  ModelSpec model;
  OracleConfig oracle;
  EstimatorConfig estimator;

  std::optional<double> tau;
  std::optional<int> k;
  int restarts = 100;
  std::vector<double> sweep_taus;
  bool mitigate = false;

  /// Clustering-only mode: read the matrix instead of estimating it.
  std::filesystem::path corr_matrix;

  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct RunResult {
  std::optional<CorrelationEstimate> estimate;
  Matrix corr;
  std::vector<std::string> names;
  Clustering clustering;
  bool exact_k = true;
  std::vector<TauCount> sweep;
  std::vector<MitigationReport> mitigations;
  std::optional<PropagationSummary> propagation;
  /// Paths relative to out_dir, in emission order.
  std::vector<std::string> files;
};

/// Ingest, estimate, cluster, optionally sweep and mitigate, then write every
/// artifact plus manifest.json under out_dir. Configuration problems throw
/// ConfigError before anything is written. A later failure writes a manifest
/// flagged partial and rethrows.
RunResult run(const RunConfig& config);

/// Loads the dataset a config names, applying the subsample if any.
Dataset load_configured_dataset(const RunConfig& config);

}  // namespace fairrep

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairrep/clustering.hpp"
#include "fairrep/estimator.hpp"
#include "fairrep/mitigate.hpp"

namespace fairrep::report {

using json = nlohmann::ordered_json;

/// "f1".."f16".
std::vector<std::string> metric_labels();

/// Header "metric,<names...>", one row per name; undefined entries are empty.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& names);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXi& m,
                      const std::vector<std::string>& names);

struct NamedMatrix {
  Matrix values;
  std::vector<std::string> names;
};
/// Reads a square matrix in the write_matrix_csv layout; the leading row-label
/// column is optional. Empty cells read as NaN. Throws ConfigError.
NamedMatrix read_matrix_csv(const std::filesystem::path& path);

/// iteration,sample_id,accuracy,f1..f16 with empty cells for invalid metrics.
void write_sample_tables_csv(const std::filesystem::path& path, const std::vector<FairnessSampleTable>& tables);

json to_json(const Matrix& m);
json estimate_to_json(const CorrelationEstimate& est);
json clustering_to_json(const Clustering& clustering, const Matrix& corr, const std::vector<std::string>& names);
std::string clustering_to_dot(const Clustering& clustering, const Matrix& corr, const std::vector<std::string>& names);
json mitigation_to_json(const MitigationReport& report);
json propagation_to_json(const PropagationSummary& summary);
void write_propagation_csv(const std::filesystem::path& path, const PropagationSummary& summary);
void write_tau_sweep_csv(const std::filesystem::path& path, const std::vector<TauCount>& sweep);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string content_hash(const std::filesystem::path& path);

}  // namespace fairrep::report

#include "fairrep/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairrep/csv.hpp"

namespace fairrep::report {

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metric_ref(int index, const std::vector<std::string>& names) {
  json j;
  j["metric"] = names.at(static_cast<std::size_t>(index));
  if (names.size() == static_cast<std::size_t>(kMetricCount) && names[static_cast<std::size_t>(index)] == metric_label(index))
    j["name"] = std::string(metric_name(index));
  return j;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename M>
void write_matrix(const std::filesystem::path& path, const M& m, const std::vector<std::string>& names,
                  auto&& cell) {
  std::ostringstream out;
  out << "metric";
  for (const auto& n : names) out << ',' << csv::escape(n);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << csv::escape(names.at(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << cell(m(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

}  // namespace

std::vector<std::string> metric_labels() {
  std::vector<std::string> out;
  for (int i = 0; i < kMetricCount; ++i) out.push_back(metric_label(i));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& names) {
  write_matrix(path, m, names, [](double v) { return csv::format_number(v); });
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXi& m,
                      const std::vector<std::string>& names) {
  write_matrix(path, m, names, [](int v) { return std::to_string(v); });
}

NamedMatrix read_matrix_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("matrix file not found: " + path.string());
  csv::Table table;
  try {
    table = csv::read(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const bool labelled = !table.header.empty() && table.header.front() == "metric";
  NamedMatrix out;
  out.names.assign(table.header.begin() + (labelled ? 1 : 0), table.header.end());
  const auto m = static_cast<Eigen::Index>(out.names.size());
  if (m == 0 || static_cast<Eigen::Index>(table.rows.size()) != m)
    throw ConfigError(path.string() + ": expected a square matrix with one row per column");
  out.values.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::string& cell = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + (labelled ? 1 : 0))];
      if (cell.empty() || cell == "nan" || cell == "NaN") {
        out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      try {
        std::size_t pos = 0;
        out.values(i, j) = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": non-numeric cell '" + cell + "'");
      }
    }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double a = out.values(i, j), b = out.values(j, i);
      if (std::isnan(a) != std::isnan(b) || (!std::isnan(a) && std::abs(a - b) > 1e-12))
        throw ConfigError(path.string() + ": matrix is not symmetric");
    }
  return out;
}

void write_sample_tables_csv(const std::filesystem::path& path, const std::vector<FairnessSampleTable>& tables) {
  std::ostringstream out;
  out << "iteration,sample_id,accuracy";
  for (int i = 0; i < kMetricCount; ++i) out << ',' << metric_label(i);
  out << '\n';
  for (const auto& t : tables)
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      const auto& row = t.rows[k];
      out << t.iteration << ',' << k << ',' << csv::format_number(row.accuracy);
      for (int i = 0; i < kMetricCount; ++i)
        out << ',' << (row.fairness.valid(i) ? csv::format_number(row.fairness.values(i)) : std::string{});
      out << '\n';
    }
  write_text(path, out.str());
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json estimate_to_json(const CorrelationEstimate& est) {
  json j;
  j["metrics"] = metric_labels();
  json names = json::array();
  for (int i = 0; i < kMetricCount; ++i) names.push_back(std::string(metric_name(i)));
  j["metric_names"] = names;
  j["mean"] = to_json(est.mean);
  j["conf_error"] = to_json(est.conf_error);
  json support = json::array();
  for (Eigen::Index i = 0; i < est.support.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < est.support.cols(); ++k) row.push_back(est.support(i, k));
    support.push_back(std::move(row));
  }
  j["support"] = support;
  json per = json::array();
  for (const auto& m : est.per_iteration) per.push_back(to_json(m));
  j["per_iteration"] = per;
  return j;
}

json clustering_to_json(const Clustering& clustering, const Matrix& corr, const std::vector<std::string>& names) {
  json j;
  j["tau"] = clustering.tau;
  j["restarts"] = clustering.restarts_used;
  j["cluster_count"] = clustering.size();
  json clusters = json::array();
  for (const auto& c : clustering.clusters) {
    json cj;
    cj["pivot"] = metric_ref(c.pivot, names);
    json members = json::array();
    for (std::size_t m = 1; m < c.members.size(); ++m) {
      json mj = metric_ref(c.members[m], names);
      mj["correlation"] = number_or_null(corr(c.pivot, c.members[m]));
      members.push_back(std::move(mj));
    }
    cj["members"] = members;
    clusters.push_back(std::move(cj));
  }
  j["clusters"] = clusters;
  return j;
}

std::string clustering_to_dot(const Clustering& clustering, const Matrix& corr, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "digraph fairness_clusters {\n";
  out << "  label=\"tau = " << fixed(clustering.tau, 3) << "\";\n";
  out << "  node [shape=ellipse, style=filled, fillcolor=white];\n";
  for (const auto& c : clustering.clusters) {
    out << "  \"" << names.at(static_cast<std::size_t>(c.pivot)) << "\" [fillcolor=orange, penwidth=2];\n";
    for (std::size_t m = 1; m < c.members.size(); ++m)
      out << "  \"" << names.at(static_cast<std::size_t>(c.members[m])) << "\";\n";
  }
  for (const auto& c : clustering.clusters)
    for (std::size_t m = 1; m < c.members.size(); ++m)
      out << "  \"" << names.at(static_cast<std::size_t>(c.members[m])) << "\" -> \""
          << names.at(static_cast<std::size_t>(c.pivot)) << "\" [label=\"" << fixed(corr(c.pivot, c.members[m]), 2)
          << "\"];\n";
  out << "}\n";
  return out.str();
}

json mitigation_to_json(const MitigationReport& r) {
  auto vec = [](const auto& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
    return a;
  };
  json j;
  j["target"] = metric_label(r.target);
  j["target_name"] = std::string(metric_name(r.target));
  j["noop"] = r.noop;
  if (!r.note.empty()) j["note"] = r.note;
  j["threshold_unprivileged"] = r.threshold_unprivileged;
  j["threshold_privileged"] = r.threshold_privileged;
  j["accuracy_before"] = r.accuracy_before;
  j["accuracy_after"] = r.accuracy_after;
  j["baseline"] = vec(r.baseline.values);
  j["mitigated"] = vec(r.mitigated.values);
  j["baseline_gap"] = vec(fairness_gaps(r.baseline));
  j["mitigated_gap"] = vec(fairness_gaps(r.mitigated));
  j["delta"] = vec(r.delta);
  return j;
}

json propagation_to_json(const PropagationSummary& s) {
  json j;
  j["pairs"] = s.pairs;
  j["sign_agreement"] = s.sign_agreement;
  j["ratio_within_band"] = s.ratio_within_band;
  json entries = json::array();
  for (const auto& e : s.entries) {
    json ej;
    ej["pivot"] = metric_label(e.pivot);
    ej["member"] = metric_label(e.member);
    ej["correlation"] = number_or_null(e.correlation);
    ej["epsilon"] = number_or_null(e.epsilon);
    ej["delta"] = number_or_null(e.delta);
    ej["predicted"] = number_or_null(e.predicted);
    ej["ratio"] = number_or_null(e.ratio);
    ej["sign_agree"] = e.sign_agree;
    ej["included"] = e.included;
    entries.push_back(std::move(ej));
  }
  j["entries"] = entries;
  return j;
}

void write_propagation_csv(const std::filesystem::path& path, const PropagationSummary& s) {
  std::ostringstream out;
  out << "pivot,member,correlation,epsilon,delta,predicted,sign_agree\n";
  for (const auto& e : s.entries)
    out << metric_label(e.pivot) << ',' << metric_label(e.member) << ',' << csv::format_number(e.correlation) << ','
        << csv::format_number(e.epsilon) << ',' << csv::format_number(e.delta) << ','
        << csv::format_number(e.predicted) << ',' << (e.included ? (e.sign_agree ? "1" : "0") : "") << '\n';
  write_text(path, out.str());
}

void write_tau_sweep_csv(const std::filesystem::path& path, const std::vector<TauCount>& sweep) {
  std::ostringstream out;
  out << "tau,clusters\n";
  for (const auto& t : sweep) out << csv::format_number(t.tau) << ',' << t.clusters << '\n';
  write_text(path, out.str());
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace fairrep::report

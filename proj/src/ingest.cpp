#include "fairrep/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fairrep/csv.hpp"

namespace fairrep {

namespace {

void stderr_sink(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::atomic<WarningSink> g_sink{&stderr_sink};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

double require_number(const std::string& key, const std::string& value) {
  auto v = parse_number(value);
  if (!v) throw ConfigError("schema: " + key + " must be numeric, got '" + value + "'");
  return *v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("schema: " + key + " must be a boolean, got '" + value + "'");
}

// Maps one column to {0,1} per the schema rule; -1 marks rows to filter out.
struct BinaryRule {
  std::string column;
  std::optional<std::string> positive;
  std::optional<double> positive_min;
  std::optional<std::string> negative;
  const char* role;
};

std::vector<int> reduce_binary(const csv::Table& table, int col, const BinaryRule& rule,
                               const std::vector<char>& missing) {
  std::vector<int> out(table.rows.size(), -1);
  std::set<std::string> distinct;
  bool positive_seen = false;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (missing[r]) continue;
    const std::string& cell = table.rows[r][col];
    distinct.insert(cell);
    if (rule.positive_min) {
      auto v = parse_number(cell);
      if (!v)
        throw ConfigError(std::string(rule.role) + " column '" + rule.column +
                          "' has non-numeric value '" + cell + "' under a numeric threshold");
      out[r] = *v >= *rule.positive_min ? 1 : 0;
    } else if (cell == *rule.positive) {
      out[r] = 1;
      positive_seen = true;
    } else if (!rule.negative || cell == *rule.negative) {
      out[r] = 0;
    }
  }
  if (rule.positive_min) return out;
  if (!positive_seen)
    throw ConfigError(std::string(rule.role) + " column '" + rule.column + "' never takes value '" +
                      *rule.positive + "'");
  if (!rule.negative && distinct.size() > 2)
    throw ConfigError(std::string(rule.role) + " column '" + rule.column + "' has " +
                      std::to_string(distinct.size()) +
                      " distinct values and no second value to filter on");
  return out;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  return g_sink.exchange(sink ? sink : &stderr_sink);
}

void warn(const std::string& message) { g_sink.load()(message); }

Schema parse_schema(const std::string& text, const std::filesystem::path& base_dir) {
  Schema schema;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("schema line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "name") {
      schema.name = value;
    } else if (key == "file") {
      std::filesystem::path p(value);
      schema.data_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (key == "delimiter") {
      if (value == "\\t" || value == "tab")
        schema.delimiter = '\t';
      else if (value.size() == 1)
        schema.delimiter = value[0];
      else
        throw ConfigError("schema: delimiter must be one character");
    } else if (key == "sensitive_col") {
      schema.sensitive_col = value;
    } else if (key == "privileged_value") {
      schema.privileged_value = value;
    } else if (key == "privileged_min") {
      schema.privileged_min = require_number(key, value);
    } else if (key == "unprivileged_value") {
      schema.unprivileged_value = value;
    } else if (key == "label_col") {
      schema.label_col = value;
    } else if (key == "favorable_value") {
      schema.favorable_value = value;
    } else if (key == "favorable_min") {
      schema.favorable_min = require_number(key, value);
    } else if (key == "unfavorable_value") {
      schema.unfavorable_value = value;
    } else if (key == "drop_cols") {
      schema.drop_cols = split_list(value);
    } else if (key == "categorical_cols") {
      schema.categorical_cols = split_list(value);
    } else if (key == "missing_values") {
      auto extra = split_list(value);
      schema.missing_values.insert(schema.missing_values.end(), extra.begin(), extra.end());
    } else if (key == "sensitive_as_feature") {
      schema.sensitive_as_feature = parse_bool(key, value);
    } else {
      throw ConfigError("schema: unknown key '" + key + "'");
    }
  }
  if (schema.sensitive_col.empty()) throw ConfigError("schema: sensitive_col is required");
  if (schema.label_col.empty()) throw ConfigError("schema: label_col is required");
  if (schema.privileged_value.has_value() == schema.privileged_min.has_value())
    throw ConfigError("schema: exactly one of privileged_value / privileged_min is required");
  if (schema.favorable_value.has_value() == schema.favorable_min.has_value())
    throw ConfigError("schema: exactly one of favorable_value / favorable_min is required");
  return schema;
}

Schema parse_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Schema schema = parse_schema(buf.str(), path.parent_path());
  if (schema.name.empty()) schema.name = path.stem().string();
  return schema;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"compas", "adult", "german", "bank"};
  return names;
}

Schema preset_schema(const std::string& name, const std::filesystem::path& data_dir) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("unknown dataset preset '" + name + "'");
  return parse_schema_file(data_dir / "schemas" / (name + ".schema"));
}

Dataset load_dataset(const Schema& schema) { return load_dataset(schema.data_file, schema); }

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw ConfigError("data file not found: " + path.string());
  csv::Table table;
  try {
    table = csv::read(path, schema.delimiter);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }

  const int s_col = table.column(schema.sensitive_col);
  const int y_col = table.column(schema.label_col);
  if (s_col < 0) throw ConfigError("sensitive column '" + schema.sensitive_col + "' not in " + path.string());
  if (y_col < 0) throw ConfigError("label column '" + schema.label_col + "' not in " + path.string());
  for (const auto& c : schema.drop_cols)
    if (table.column(c) < 0) throw ConfigError("drop column '" + c + "' not in " + path.string());
  for (const auto& c : schema.categorical_cols)
    if (table.column(c) < 0) throw ConfigError("categorical column '" + c + "' not in " + path.string());

  auto contains = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };

  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (c == s_col || c == y_col || contains(schema.drop_cols, table.header[c])) continue;
    feature_cols.push_back(c);
  }
  std::vector<int> used = feature_cols;
  used.push_back(s_col);
  used.push_back(y_col);

  const std::size_t n_raw = table.rows.size();
  std::vector<char> missing(n_raw, 0);
  for (std::size_t r = 0; r < n_raw; ++r)
    for (int c : used)
      if (contains(schema.missing_values, trim(table.rows[r][c]))) {
        missing[r] = 1;
        break;
      }

  for (auto& row : table.rows)
    for (auto& cell : row) cell = trim(cell);

  const auto s_raw = reduce_binary(table, s_col,
                                   {schema.sensitive_col, schema.privileged_value, schema.privileged_min,
                                    schema.unprivileged_value, "sensitive"},
                                   missing);
  const auto y_raw = reduce_binary(table, y_col,
                                   {schema.label_col, schema.favorable_value, schema.favorable_min,
                                    schema.unfavorable_value, "label"},
                                   missing);

  std::vector<std::size_t> keep;
  std::size_t dropped = 0, filtered = 0;
  for (std::size_t r = 0; r < n_raw; ++r) {
    if (missing[r])
      ++dropped;
    else if (s_raw[r] < 0 || y_raw[r] < 0)
      ++filtered;
    else
      keep.push_back(r);
  }
  if (keep.empty()) throw ConfigError("no usable rows in " + path.string());
  if (dropped > 0) warn(std::to_string(dropped) + " rows with missing values dropped from " + path.string());

  // Column encodings: numeric unless declared categorical or any kept cell is non-numeric.
  struct Encoding {
    int col;
    bool categorical;
    std::vector<std::string> levels;
  };
  std::vector<Encoding> encodings;
  std::size_t width = 0;
  for (int c : feature_cols) {
    Encoding enc{c, contains(schema.categorical_cols, table.header[c]), {}};
    if (!enc.categorical)
      for (auto r : keep)
        if (!parse_number(table.rows[r][c])) {
          enc.categorical = true;
          break;
        }
    if (enc.categorical) {
      std::set<std::string> levels;
      for (auto r : keep) levels.insert(table.rows[r][c]);
      enc.levels.assign(levels.begin(), levels.end());
      width += enc.levels.size();
    } else {
      width += 1;
    }
    encodings.push_back(std::move(enc));
  }
  if (schema.sensitive_as_feature) width += 1;

  const auto n = static_cast<Eigen::Index>(keep.size());
  Dataset ds;
  ds.name = schema.name.empty() ? path.stem().string() : schema.name;
  ds.features.setZero(n, static_cast<Eigen::Index>(width));
  ds.sensitive.resize(n);
  ds.label.resize(n);
  ds.dropped_rows = dropped;
  ds.filtered_rows = filtered;

  for (Eigen::Index i = 0; i < n; ++i) {
    ds.sensitive(i) = s_raw[keep[i]];
    ds.label(i) = y_raw[keep[i]];
  }

  Eigen::Index out = 0;
  for (const auto& enc : encodings) {
    const std::string& name = table.header[enc.col];
    if (enc.categorical) {
      for (std::size_t l = 0; l < enc.levels.size(); ++l) ds.feature_names.push_back(name + "=" + enc.levels[l]);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& cell = table.rows[keep[i]][enc.col];
        const auto it = std::lower_bound(enc.levels.begin(), enc.levels.end(), cell);
        ds.features(i, out + (it - enc.levels.begin())) = 1.0;
      }
      out += static_cast<Eigen::Index>(enc.levels.size());
    } else {
      ds.feature_names.push_back(name);
      auto col = ds.features.col(out);
      for (Eigen::Index i = 0; i < n; ++i) col(i) = *parse_number(table.rows[keep[i]][enc.col]);
      if (!col.allFinite()) throw ConfigError("non-finite value in numeric column '" + name + "'");
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
      if (sd > 0.0) col /= sd;
      ++out;
    }
  }
  if (schema.sensitive_as_feature) {
    ds.feature_names.push_back(schema.sensitive_col);
    ds.features.col(out) = ds.sensitive.cast<double>();
  }
  return ds;
}

Dataset select_rows(const Dataset& dataset, const IndexList& rows) {
  Dataset out;
  out.name = dataset.name;
  out.feature_names = dataset.feature_names;
  out.features = dataset.features(rows, Eigen::all);
  out.sensitive = dataset.sensitive(rows);
  out.label = dataset.label(rows);
  return out;
}

Dataset subsample(const Dataset& dataset, Eigen::Index n, std::uint64_t seed) {
  if (n <= 0 || n > dataset.size()) throw ConfigError("subsample size out of range");
  IndexList all(static_cast<std::size_t>(dataset.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
  Rng rng(seed);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(n));
  std::sort(all.begin(), all.end());
  return select_rows(dataset, all);
}

Split split(const Dataset& dataset, const SplitConfig& config) {
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  const Eigen::Index n = dataset.size();
  if (n == 0) throw ConfigError("cannot split an empty dataset");

  std::array<IndexList, 4> strata;
  for (Eigen::Index i = 0; i < n; ++i)
    strata[stratum_of(dataset.sensitive(i), dataset.label(i))].push_back(i);
  for (int g = 0; g < 4; ++g)
    if (strata[g].empty())
      warn("stratum (S=" + std::to_string(g / 2) + ",Y=" + std::to_string(g % 2) + ") is empty in " +
           dataset.name);

  const auto total = static_cast<long>(std::lround(config.test_fraction * static_cast<double>(n)));
  std::array<long, 4> quota{}, lo{}, hi{};
  std::array<double, 4> ideal{};
  long assigned = 0;
  for (int g = 0; g < 4; ++g) {
    const auto size = static_cast<long>(strata[g].size());
    ideal[g] = config.test_fraction * static_cast<double>(size);
    quota[g] = static_cast<long>(std::floor(ideal[g]));
    lo[g] = size >= 2 ? 1 : 0;
    hi[g] = size >= 2 ? size - 1 : size;
    quota[g] = std::clamp(quota[g], lo[g], hi[g]);
    assigned += quota[g];
  }
  // Move toward the exact total, first within the both-sides bounds, then
  // relaxing them if the total cannot be met otherwise.
  for (int pass = 0; pass < 2 && assigned != total; ++pass) {
    if (pass == 1)
      for (int g = 0; g < 4; ++g) {
        lo[g] = 0;
        hi[g] = static_cast<long>(strata[g].size());
      }
    while (assigned != total) {
      int best = -1;
      for (int g = 0; g < 4; ++g) {
        const double deficit = ideal[g] - static_cast<double>(quota[g]);
        if (assigned < total && quota[g] < hi[g]) {
          if (best < 0 || deficit > ideal[best] - static_cast<double>(quota[best])) best = g;
        } else if (assigned > total && quota[g] > lo[g]) {
          if (best < 0 || deficit < ideal[best] - static_cast<double>(quota[best])) best = g;
        }
      }
      if (best < 0) break;
      const long step = assigned < total ? 1 : -1;
      quota[best] += step;
      assigned += step;
    }
  }

  Rng rng(derive_seed(config.seed, {0x5EED5EEDULL}));
  Split out;
  for (int g = 0; g < 4; ++g) {
    auto members = strata[g];
    rng.shuffle(members);
    const auto q = static_cast<std::size_t>(quota[g]);
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::size_t GroupPartition::total() const {
  std::size_t t = 0;
  for (const auto& s : strata) t += s.size();
  return t;
}

bool GroupPartition::has_empty_stratum() const {
  return std::any_of(strata.begin(), strata.end(), [](const IndexList& s) { return s.empty(); });
}

GroupPartition partition_groups(const Dataset& dataset, const IndexList& train) {
  GroupPartition p;
  for (auto i : train) {
    if (i < 0 || i >= dataset.size()) throw std::out_of_range("partition_groups: index out of range");
    p.strata[stratum_of(dataset.sensitive(i), dataset.label(i))].push_back(i);
  }
  for (int g = 0; g < 4; ++g)
    if (p.strata[g].empty())
      warn("training stratum (S=" + std::to_string(g / 2) + ",Y=" + std::to_string(g % 2) + ") is empty");
  return p;
}

}  // namespace fairrep

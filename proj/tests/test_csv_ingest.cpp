#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fairrep/csv.hpp"
#include "fairrep/ingest.hpp"
#include "test_support.hpp"

using namespace fairrep;

namespace {
std::vector<std::string> captured;
void capture(const std::string& m) { captured.push_back(m); }
}  // namespace

TEST_CASE("csv parse handles quotes and CRLF") {
  const auto t = csv::parse("a,b,c\r\n1,\"x,y\",\"say \"\"hi\"\"\"\r\n2,,3\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "say \"hi\"");
  CHECK(t.rows[1][1].empty());
  CHECK(t.column("c") == 2);
  CHECK(t.column("z") == -1);
}

TEST_CASE("csv parse rejects ragged rows") { CHECK_THROWS(csv::parse("a,b\n1,2,3\n")); }

TEST_CASE("format_number round-trips and blanks non-finite values") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.678, 0.0}) CHECK(std::stod(csv::format_number(v)) == v);
  CHECK(csv::format_number(std::nan("")).empty());
  CHECK(csv::format_number(INFINITY).empty());
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("plain") == "plain");
}

TEST_CASE("schema parsing") {
  const auto s = parse_schema(
      "# comment\nfile = x.csv\nsensitive_col = sex\nprivileged_value = male\nlabel_col = y\n"
      "favorable_value = 1\ndrop_cols = a, b\ndelimiter = ;\n",
      "/base");
  CHECK(s.data_file == std::filesystem::path("/base/x.csv"));
  CHECK(s.delimiter == ';');
  CHECK(s.drop_cols == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(parse_schema("label_col = y\n"), ConfigError);
  CHECK_THROWS_AS(parse_schema_file("/nonexistent/x.schema"), ConfigError);
  CHECK_THROWS_AS(preset_schema("no_such_preset"), ConfigError);
}

TEST_CASE("german preset loads with the expected shape") {
  const Dataset ds = load_dataset(preset_schema("german"));
  CHECK(ds.size() == 1000);
  CHECK(ds.label.sum() == 700);
  CHECK(ds.sensitive.sum() == 690);
  CHECK(ds.dropped_rows == 0);
  CHECK(ds.feature_names.back() == "sex");
  CHECK(ds.features.allFinite());
  // Numeric columns are standardized.
  const auto col = std::find(ds.feature_names.begin(), ds.feature_names.end(), "age") - ds.feature_names.begin();
  REQUIRE(col < ds.dims());
  const Vector age = ds.features.col(col);
  CHECK(std::abs(age.mean()) < 1e-12);
  CHECK(std::sqrt((age.array() - age.mean()).square().mean()) == doctest::Approx(1.0).epsilon(1e-12));
  for (Eigen::Index j = 0; j < ds.dims(); ++j) {
    if (ds.feature_names[static_cast<std::size_t>(j)].find('=') == std::string::npos) continue;
    CHECK(((ds.features.col(j).array() == 0.0) || (ds.features.col(j).array() == 1.0)).all());
  }
}

TEST_CASE("compas preset keeps only the two race groups") {
  const Dataset ds = load_dataset(preset_schema("compas"));
  CHECK(ds.size() == 6150);
  CHECK(ds.filtered_rows == 7214 - 6150);
  CHECK(ds.sensitive.sum() > 0);
  CHECK(ds.sensitive.sum() < ds.size());
}

TEST_CASE("rows with missing values are dropped with a warning") {
  const auto dir = testing::scratch_dir("missing");
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "d.csv");
    f << "x,color,g,y\n1,red,m,1\n2,?,f,0\n3,blue,f,1\n,red,m,0\n5,blue,m,0\n6,red,f,1\n";
  }
  {
    std::ofstream f(dir / "d.schema");
    f << "file = d.csv\nsensitive_col = g\nprivileged_value = m\nlabel_col = y\nfavorable_value = 1\n";
  }
  captured.clear();
  auto old = set_warning_sink(capture);
  const Dataset ds = load_dataset(parse_schema_file(dir / "d.schema"));
  set_warning_sink(old);
  CHECK(ds.size() == 4);
  CHECK(ds.dropped_rows == 2);
  CHECK(!captured.empty());
  // x, color=blue, color=red, g
  CHECK(ds.dims() == 4);

  std::ofstream(dir / "bad.schema") << "file = d.csv\nsensitive_col = nope\nprivileged_value = m\nlabel_col = y\n"
                                       "favorable_value = 1\n";
  CHECK_THROWS_AS(load_dataset(parse_schema_file(dir / "bad.schema")), ConfigError);
  std::ofstream(dir / "nofile.schema") << "file = missing.csv\nsensitive_col = g\nprivileged_value = m\n"
                                          "label_col = y\nfavorable_value = 1\n";
  CHECK_THROWS_AS(load_dataset(parse_schema_file(dir / "nofile.schema")), ConfigError);
}

TEST_CASE("split is a stratified partition and deterministic") {
  const Dataset ds = testing::synthetic_dataset(503, 7);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Split sp = split(ds, {0.3, seed});
    CHECK(sp.test.size() == static_cast<std::size_t>(std::lround(0.3 * 503)));
    CHECK(sp.train.size() + sp.test.size() == 503);
    CHECK(std::is_sorted(sp.train.begin(), sp.train.end()));
    std::vector<Eigen::Index> all(sp.train);
    all.insert(all.end(), sp.test.begin(), sp.test.end());
    std::sort(all.begin(), all.end());
    for (Eigen::Index i = 0; i < 503; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
    std::array<int, 4> train_count{}, test_count{};
    for (auto i : sp.train) ++train_count[stratum_of(ds.sensitive(i), ds.label(i))];
    for (auto i : sp.test) ++test_count[stratum_of(ds.sensitive(i), ds.label(i))];
    for (int g = 0; g < 4; ++g) {
      CHECK(train_count[g] > 0);
      CHECK(test_count[g] > 0);
      const double share = double(test_count[g]) / (train_count[g] + test_count[g]);
      CHECK(share == doctest::Approx(0.3).epsilon(0.05));
    }
    const Split again = split(ds, {0.3, seed});
    CHECK(again.train == sp.train);
  }
  CHECK(split(ds, {0.3, 1}).test != split(ds, {0.3, 2}).test);
}

TEST_CASE("partition_groups assigns each row to its stratum") {
  const Dataset ds = testing::synthetic_dataset(300, 3);
  const Split sp = split(ds, {0.3, 5});
  const GroupPartition gp = partition_groups(ds, sp.train);
  CHECK(gp.total() == sp.train.size());
  CHECK(!gp.has_empty_stratum());
  for (int g = 0; g < 4; ++g)
    for (auto i : gp.strata[static_cast<std::size_t>(g)]) CHECK(stratum_of(ds.sensitive(i), ds.label(i)) == g);

  Dataset one_group = ds;
  one_group.sensitive.setOnes();
  captured.clear();
  auto old = set_warning_sink(capture);
  const GroupPartition empty = partition_groups(one_group, sp.train);
  set_warning_sink(old);
  CHECK(empty.has_empty_stratum());
  CHECK(!captured.empty());
}

TEST_CASE("subsample and select_rows") {
  const Dataset ds = testing::synthetic_dataset(200, 11);
  const Dataset sub = subsample(ds, 50, 9);
  CHECK(sub.size() == 50);
  const Dataset sub2 = subsample(ds, 50, 9);
  CHECK(sub.features == sub2.features);
  const Dataset sel = select_rows(ds, {3, 1});
  CHECK(sel.features.row(0) == ds.features.row(3));
  CHECK(sel.label(1) == ds.label(1));
}

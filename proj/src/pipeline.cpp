#include "fairrep/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <functional>

#include "fairrep/report.hpp"

namespace fairrep {

namespace {

namespace fs = std::filesystem;
using report::json;

// Child streams of the run seed.
enum : std::uint64_t { kClusterStream = 2, kMitigationSplit = 3, kMitigationModel = 4 };

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_to_json(const RunConfig& c, const Dataset* dataset) {
  json j;
  if (!c.corr_matrix.empty()) {
    j["corr_matrix"] = c.corr_matrix.filename().string();
  } else {
    json d;
    d["preset"] = c.dataset;
    if (!c.schema_path.empty()) d["schema"] = c.schema_path.filename().string();
    if (!c.data_path.empty()) d["data"] = c.data_path.filename().string();
    if (c.subsample) d["subsample"] = *c.subsample;
    if (dataset) {
      d["name"] = dataset->name;
      d["rows"] = dataset->size();
      d["features"] = dataset->dims();
      d["dropped_rows"] = dataset->dropped_rows;
      d["filtered_rows"] = dataset->filtered_rows;
    }
    j["dataset"] = d;

    json m;
    m["family"] = to_string(c.model.family);
    m["hyperparameters"] = c.model.hyperparameters;
    j["model"] = m;

    json o;
    if (c.oracle.t_size) o["t_size"] = *c.oracle.t_size;
    else o["t_size"] = nullptr;
    o["accept_threshold"] = c.oracle.accept_threshold;
    o["max_attempts"] = c.oracle.max_attempts_per_sample;
    j["oracle"] = o;

    json e;
    e["samples"] = c.estimator.n_samples;
    e["iterations"] = c.estimator.n_iterations;
    e["confidence_level"] = c.estimator.confidence_level;
    e["min_valid_pairs"] = c.estimator.min_valid_pairs;
    e["test_fraction"] = c.estimator.test_fraction;
    j["estimator"] = e;
  }
  json cl;
  if (c.tau) cl["tau"] = *c.tau;
  if (c.k) cl["k"] = *c.k;
  cl["restarts"] = c.restarts;
  if (!c.sweep_taus.empty()) cl["sweep"] = c.sweep_taus;
  j["clustering"] = cl;
  j["mitigate"] = c.mitigate;
  j["seed"] = c.seed;
  return j;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

void RunConfig::validate() const {
  if (tau.has_value() == k.has_value()) throw ConfigError("exactly one of tau or k must be given");
  if (tau && !(*tau > 0.0 && *tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (k && *k < 1) throw ConfigError("k must be at least 1");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  for (double t : sweep_taus)
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("sweep values must lie in (0, 1)");
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  if (!corr_matrix.empty()) {
    if (!dataset.empty() || !schema_path.empty() || !data_path.empty())
      throw ConfigError("--corr-matrix cannot be combined with a dataset");
    if (mitigate) throw ConfigError("mitigation needs a dataset; it is unavailable with --corr-matrix");
    return;
  }
  if (dataset.empty() == schema_path.empty()) throw ConfigError("give either a dataset preset or a schema file");
  if (!data_path.empty() && schema_path.empty()) throw ConfigError("--data requires --schema");
  if (subsample && *subsample < 2) throw ConfigError("subsample must be at least 2 rows");
  model.validate();
  oracle.validate();
  estimator.validate();
}

Dataset load_configured_dataset(const RunConfig& config) {
  Schema schema = config.schema_path.empty() ? preset_schema(config.dataset, config.data_dir)
                                             : parse_schema_file(config.schema_path);
  if (!config.data_path.empty()) schema.data_file = config.data_path;
  Dataset ds = load_dataset(schema);
  if (config.subsample) {
    if (*config.subsample > ds.size())
      throw ConfigError("subsample of " + std::to_string(*config.subsample) + " rows exceeds the " +
                        std::to_string(ds.size()) + " available");
    ds = subsample(ds, *config.subsample, derive_seed(config.seed, {0x5B5A}));
  }
  return ds;
}

RunResult run(const RunConfig& input) {
  RunConfig config = input;
  config.validate();
  config.estimator.seed = config.seed;

  json timings = json::object();
  const std::string started = utc_now();

  // Everything that can fail on bad configuration happens before the output
  // directory exists.
  RunResult result;
  std::optional<Dataset> dataset;
  {
    Timer t;
    if (!config.corr_matrix.empty()) {
      auto named = report::read_matrix_csv(config.corr_matrix);
      result.corr = std::move(named.values);
      result.names = std::move(named.names);
      const auto active = static_cast<int>(active_metrics(result.corr).size());
      if (active == 0) throw ConfigError("matrix has no defined diagonal entry");
      if (config.k && *config.k > active) throw ConfigError("k exceeds the number of defined metrics");
    } else {
      dataset = load_configured_dataset(config);
      result.names = report::metric_labels();
    }
    timings["ingest"] = t.seconds();
  }

  const fs::path out = config.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());

  auto emit = [&](const std::string& name, const std::function<void(const fs::path&)>& writer) {
    writer(out / name);
    result.files.push_back(name);
  };

  auto write_manifest = [&](bool partial, const std::string& error) {
    json m;
    m["tool"] = "fairrep";
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["status"] = partial ? "failed" : "complete";
    m["partial"] = partial;
    if (!error.empty()) m["error"] = error;
    m["config"] = config_to_json(config, dataset ? &*dataset : nullptr);
    m["threads"] = config.estimator.threads;
    json ts;
    ts["started"] = started;
    ts["finished"] = utc_now();
    m["timestamps"] = ts;
    m["timings_seconds"] = timings;
    json files = json::array();
    for (const auto& f : result.files) {
      json fj;
      fj["path"] = f;
      fj["bytes"] = fs::file_size(out / f);
      fj["fnv1a64"] = report::content_hash(out / f);
      files.push_back(std::move(fj));
    }
    m["files"] = files;
    report::write_json(out / "manifest.json", m);
  };

  try {
    if (dataset) {
      Timer t;
      auto est = corr_estimate(*dataset, config.model, config.oracle, config.estimator);
      timings["estimate"] = t.seconds();
      result.corr = est.mean;

      emit("samples.csv", [&](const fs::path& p) { report::write_sample_tables_csv(p, est.tables); });
      emit("correlation_mean.csv", [&](const fs::path& p) { report::write_matrix_csv(p, est.mean, result.names); });
      emit("correlation_conf_error.csv",
           [&](const fs::path& p) { report::write_matrix_csv(p, est.conf_error, result.names); });
      emit("correlation_support.csv",
           [&](const fs::path& p) { report::write_matrix_csv(p, est.support, result.names); });
      emit("correlation.json", [&](const fs::path& p) { report::write_json(p, report::estimate_to_json(est)); });

      json meta;
      meta["config"] = config_to_json(config, &*dataset);
      meta["t_size"] = config.oracle.resolve_t_size(static_cast<std::size_t>(
          dataset->size() - std::lround(config.estimator.test_fraction * static_cast<double>(dataset->size()))));
      meta["aborted_iterations"] = est.aborted_iterations;
      json iters = json::array();
      long attempts = 0, rejected = 0;
      for (const auto& tb : est.tables) {
        json ij;
        ij["iteration"] = tb.iteration;
        ij["accepted"] = tb.rows.size();
        ij["attempts"] = tb.attempts;
        ij["rejected"] = tb.rejected;
        ij["shortfall"] = tb.shortfall;
        attempts += tb.attempts;
        rejected += tb.rejected;
        iters.push_back(std::move(ij));
      }
      meta["attempts"] = attempts;
      meta["rejected"] = rejected;
      meta["iterations"] = iters;
      emit("run_metadata.json", [&](const fs::path& p) { report::write_json(p, meta); });
      result.estimate = std::move(est);
    }

    {
      Timer t;
      const std::uint64_t cseed = derive_seed(config.seed, {kClusterStream});
      if (config.tau) {
        result.clustering = best_clustering(result.corr, *config.tau, config.restarts, cseed);
      } else {
        const int active = static_cast<int>(active_metrics(result.corr).size());
        if (*config.k > active)
          throw std::runtime_error("k = " + std::to_string(*config.k) + " exceeds the " + std::to_string(active) +
                                   " metrics defined on the estimated matrix");
        auto found = find_tau_for_k(result.corr, *config.k, config.restarts, cseed);
        result.clustering = std::move(found.clustering);
        result.exact_k = found.exact;
        if (!found.exact)
          warn("no tau gives exactly " + std::to_string(*config.k) + " clusters; closest has " +
               std::to_string(result.clustering.size()));
      }
      if (!satisfies_threshold(result.clustering, result.corr))
        throw std::logic_error("clustering violates the threshold property");
      timings["cluster"] = t.seconds();

      json cj = report::clustering_to_json(result.clustering, result.corr, result.names);
      if (config.k) {
        cj["requested_k"] = *config.k;
        cj["exact"] = result.exact_k;
      }
      emit("clustering.json", [&](const fs::path& p) { report::write_json(p, cj); });
      emit("clustering.dot", [&](const fs::path& p) {
        report::write_text(p, report::clustering_to_dot(result.clustering, result.corr, result.names));
      });
    }

    if (!config.sweep_taus.empty()) {
      Timer t;
      result.sweep =
          sweep_tau(result.corr, config.sweep_taus, config.restarts, derive_seed(config.seed, {kClusterStream}));
      timings["sweep"] = t.seconds();
      emit("tau_sweep.csv", [&](const fs::path& p) { report::write_tau_sweep_csv(p, result.sweep); });
    }

    if (config.mitigate) {
      Timer t;
      const Split sp = split(*dataset, SplitConfig{config.estimator.test_fraction,
                                                   derive_seed(config.seed, {kMitigationSplit})});
      const Dataset train_set = select_rows(*dataset, sp.train);
      ModelSpec spec = config.model;
      spec.seed = derive_seed(config.seed, {kMitigationModel});
      const TrainedModel model = train(spec, train_set.features, train_set.label);
      const EvaluationSet test = make_evaluation_set(*dataset, sp.test);

      json reports = json::array();
      json skipped = json::array();
      for (int pivot : result.clustering.pivots()) {
        const FairnessVector base =
            fairness_vector(confusion_split(predict(model, test.features), test.labels, test.sensitive));
        if (!base.valid(pivot)) {
          json s;
          s["target"] = metric_label(pivot);
          s["reason"] = "metric undefined on the baseline model";
          skipped.push_back(std::move(s));
          continue;
        }
        result.mitigations.push_back(mitigate_thresholds(model, test, pivot));
        reports.push_back(report::mitigation_to_json(result.mitigations.back()));
      }
      result.propagation = propagation_check(result.corr, result.clustering, result.mitigations);
      timings["mitigate"] = t.seconds();

      json mj;
      mj["metrics"] = report::metric_labels();
      mj["reports"] = reports;
      mj["skipped"] = skipped;
      emit("mitigation.json", [&](const fs::path& p) { report::write_json(p, mj); });
      emit("propagation.json",
           [&](const fs::path& p) { report::write_json(p, report::propagation_to_json(*result.propagation)); });
      emit("propagation.csv", [&](const fs::path& p) { report::write_propagation_csv(p, *result.propagation); });
    }
  } catch (const std::exception& e) {
    write_manifest(true, e.what());
    throw;
  }

  write_manifest(false, {});
  return result;
}

}  // namespace fairrep

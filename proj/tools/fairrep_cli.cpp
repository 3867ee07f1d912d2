// fairrep: estimate fairness-metric correlations, pick representative metrics
// and optionally mitigate them.
//
//   fairrep --dataset german --model logit --samples 200 --iterations 10 --tau 0.5 --out run1
//   fairrep --corr-matrix matrix.csv --k 3 --out clusters
//
// Exit status: 0 on success, 2 for configuration errors (nothing written),
// 1 for failures during the run (manifest.json flagged partial).

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairrep/pipeline.hpp"

int main(int argc, char** argv) {
  fairrep::RunConfig config;
  CLI::App app{"Fairness metric correlation, clustering and mitigation"};
  app.set_version_flag("--version", std::string("fairrep ") + fairrep::kVersion);

  std::string model = "logit", hyper;
  std::string data_dir = config.data_dir.string(), schema, data, corr, out;
  std::int64_t t_size = 0, subsample = 0;
  double tau = 0.0;
  int k = 0;

  auto* dataset_opt = app.add_option("--dataset", config.dataset, "Preset dataset name (german, compas, adult, bank)");
  auto* schema_opt = app.add_option("--schema", schema, "Schema file describing a custom dataset");
  app.add_option("--data", data, "CSV file overriding the schema's data file")->needs(schema_opt);
  app.add_option("--data-dir", data_dir, "Directory holding preset schemas and data")->capture_default_str();
  app.add_option("--subsample", subsample, "Use a random subset of this many rows");
  auto* corr_opt = app.add_option("--corr-matrix", corr, "Cluster a correlation matrix CSV; skips estimation");
  dataset_opt->excludes(schema_opt)->excludes(corr_opt);
  schema_opt->excludes(corr_opt);

  app.add_option("--model", model, "logit, knn, svm_linear, random_forest or mlp")->capture_default_str();
  app.add_option("--hyper", hyper, "Model hyperparameters, e.g. k=7 or hidden=32:16,epochs=80");

  app.add_option("--samples", config.estimator.n_samples, "Accepted samples per iteration (N)")->capture_default_str();
  app.add_option("--iterations", config.estimator.n_iterations, "Iterations (L)")->capture_default_str();
  app.add_option("--t-size", t_size, "Bootstrap training size (default: training rows, at most 2000)");
  app.add_option("--accept-threshold", config.oracle.accept_threshold, "Minimum test accuracy of a sampled model")
      ->capture_default_str();
  app.add_option("--max-attempts", config.oracle.max_attempts_per_sample, "Retries per rejected sample")
      ->capture_default_str();
  app.add_option("--confidence", config.estimator.confidence_level, "Confidence level of the error bars")
      ->capture_default_str();
  app.add_option("--min-valid-pairs", config.estimator.min_valid_pairs, "Rows needed to define a correlation")
      ->capture_default_str();
  app.add_option("--test-fraction", config.estimator.test_fraction, "Test share of each split")->capture_default_str();

  auto* tau_opt = app.add_option("--tau", tau, "Correlation threshold for clustering");
  auto* k_opt = app.add_option("--k", k, "Number of representative metrics to search for");
  tau_opt->excludes(k_opt);
  app.add_option("--restarts", config.restarts, "Pivot clustering restarts")->capture_default_str();
  app.add_option("--sweep", config.sweep_taus, "Comma-separated tau values for a cluster-count table")
      ->delimiter(',');
  app.add_flag("--mitigate", config.mitigate, "Mitigate each representative with group thresholds");

  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", config.seed, "Run seed")->capture_default_str();
  app.add_option("--threads", config.estimator.threads, "Worker threads; results do not depend on it")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config.data_dir = data_dir;
    config.schema_path = schema;
    config.data_path = data;
    config.corr_matrix = corr;
    config.out_dir = out;
    if (*tau_opt) config.tau = tau;
    if (*k_opt) config.k = k;
    if (t_size > 0) config.oracle.t_size = t_size;
    if (subsample > 0) config.subsample = subsample;
    config.model.family = fairrep::parse_family(model);
    config.model.hyperparameters = fairrep::ModelSpec::parse_hyperparameters(hyper);
    config.model.seed = config.seed;

    const auto result = fairrep::run(config);
    std::cerr << "fairrep: " << result.clustering.size() << " clusters at tau " << result.clustering.tau
              << "; artifacts in " << config.out_dir.string() << "\n";
    return 0;
  } catch (const fairrep::ConfigError& e) {
    std::cerr << "fairrep: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fairrep: error: " << e.what() << "\n";
    return 1;
  }
}

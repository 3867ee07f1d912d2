#pragma once

#include <cstdint>
#include <vector>

#include "fairrep/types.hpp"

namespace fairrep {

/// Symmetric correlation matrix; NaN entries are undefined and never link two
/// metrics. A metric whose diagonal entry is NaN is masked out entirely.
using CorrelationMatrix = Matrix;

struct Cluster {
  int pivot = -1;
  std::vector<int> members;  ///< includes the pivot, listed first
};

struct Clustering {
  std::vector<Cluster> clusters;
  double tau = 0.0;
  int restarts_used = 1;

  std::size_t size() const { return clusters.size(); }
  std::vector<int> pivots() const;
};

/// Metrics whose diagonal entry is defined.
std::vector<int> active_metrics(const CorrelationMatrix& corr);

/// Randomized pivot clustering at threshold tau: repeatedly pick a uniform
/// random unclustered metric as pivot and attach every unclustered j with
/// corr(pivot, j) >= tau. Throws std::invalid_argument unless 0 < tau < 1 and
/// at least one metric is active.
Clustering pivot_cluster(const CorrelationMatrix& corr, double tau, Rng& rng);

/// Best of `restarts` pivot runs at tau: fewest clusters, then larger mean
/// pivot-member correlation, then earliest restart. Deterministic in seed.
Clustering best_of_restarts(const CorrelationMatrix& corr, double tau, int restarts = 100, std::uint64_t seed = 0);

/// best_of_restarts at tau and at every off-diagonal correlation above tau,
/// keeping the best result under the same ordering (ties to the lowest
/// threshold). All candidates meet tau, and the cluster count is
/// non-decreasing in tau for a fixed seed, which independent restarts at each
/// tau do not guarantee. The result carries the requested tau.
Clustering best_clustering(const CorrelationMatrix& corr, double tau, int restarts = 100, std::uint64_t seed = 0);

/// Mean corr(pivot, member) over non-pivot members; 0 when all clusters are singletons.
double mean_pivot_correlation(const Clustering& clustering, const CorrelationMatrix& corr);

/// Partition of the active metrics with every member at corr >= tau of its pivot.
bool satisfies_threshold(const Clustering& clustering, const CorrelationMatrix& corr);

struct TauSearch {
  Clustering clustering;
  bool exact = false;  ///< clustering has exactly k clusters
};

/// Bisection on tau over best_clustering's cluster count (fixed seed per
/// probe). When bisection does not land on k, every tau where the count can
/// change (each off-diagonal correlation and the value just above it) plus a
/// 0.05 grid is scanned; the count closest to k wins, ties to the smaller
/// count. Throws std::out_of_range unless 1 <= k <= active metrics.
TauSearch find_tau_for_k(const CorrelationMatrix& corr, int k, int restarts = 100, std::uint64_t seed = 0,
                         double tol = 1e-3);

struct TauCount {
  double tau = 0.0;
  int clusters = 0;
};

/// best_clustering's cluster count at each tau, same seed throughout.
std::vector<TauCount> sweep_tau(const CorrelationMatrix& corr, const std::vector<double>& taus, int restarts = 100,
                                std::uint64_t seed = 0);

}  // namespace fairrep

#include "fairrep/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairrep {

std::vector<int> Clustering::pivots() const {
  std::vector<int> out;
  for (const auto& c : clusters) out.push_back(c.pivot);
  return out;
}

std::vector<int> active_metrics(const CorrelationMatrix& corr) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < corr.rows(); ++i)
    if (std::isfinite(corr(i, i))) out.push_back(static_cast<int>(i));
  return out;
}

Clustering pivot_cluster(const CorrelationMatrix& corr, double tau, Rng& rng) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("pivot_cluster: tau must lie in (0, 1)");
  if (corr.rows() != corr.cols()) throw std::invalid_argument("pivot_cluster: matrix must be square");
  std::vector<int> remaining = active_metrics(corr);
  if (remaining.empty()) throw std::invalid_argument("pivot_cluster: no active metrics");

  Clustering out;
  out.tau = tau;
  while (!remaining.empty()) {
    const auto pick = rng.below(remaining.size());
    Cluster cluster;
    cluster.pivot = remaining[pick];
    cluster.members.push_back(cluster.pivot);
    std::vector<int> rest;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (i == pick) continue;
      const int j = remaining[i];
      // NaN compares false, so undefined entries never attach.
      if (corr(cluster.pivot, j) >= tau)
        cluster.members.push_back(j);
      else
        rest.push_back(j);
    }
    out.clusters.push_back(std::move(cluster));
    remaining = std::move(rest);
  }
  return out;
}

double mean_pivot_correlation(const Clustering& clustering, const CorrelationMatrix& corr) {
  double sum = 0.0;
  long count = 0;
  for (const auto& c : clustering.clusters)
    for (std::size_t m = 1; m < c.members.size(); ++m) {
      sum += corr(c.pivot, c.members[m]);
      ++count;
    }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

Clustering best_of_restarts(const CorrelationMatrix& corr, double tau, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("best_of_restarts: restarts must be positive");
  Clustering best;
  double best_cohesion = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Clustering c = pivot_cluster(corr, tau, rng);
    const double cohesion = mean_pivot_correlation(c, corr);
    if (r == 0 || c.size() < best.size() || (c.size() == best.size() && cohesion > best_cohesion)) {
      best = std::move(c);
      best_cohesion = cohesion;
    }
  }
  best.restarts_used = restarts;
  return best;
}

Clustering best_clustering(const CorrelationMatrix& corr, double tau, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("best_clustering: restarts must be positive");
  // The pivot graph only changes at the off-diagonal correlations. Every
  // sparser graph's clusterings still meet tau, so they are candidates too;
  // with the same restart seeds on each graph, the candidate set at a lower
  // tau contains the one at a higher tau and the count cannot decrease.
  const auto active = active_metrics(corr);
  const double top = std::nextafter(1.0, 0.0);
  std::vector<double> levels;
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      const double r = corr(active[a], active[b]);
      if (r > tau) levels.push_back(std::min(r, top));
    }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  Clustering best = best_of_restarts(corr, tau, restarts, seed);
  double best_cohesion = mean_pivot_correlation(best, corr);
  for (double level : levels) {
    Clustering c = best_of_restarts(corr, level, restarts, seed);
    const double cohesion = mean_pivot_correlation(c, corr);
    if (c.size() < best.size() || (c.size() == best.size() && cohesion > best_cohesion)) {
      best = std::move(c);
      best_cohesion = cohesion;
    }
  }
  best.tau = tau;
  return best;
}

bool satisfies_threshold(const Clustering& clustering, const CorrelationMatrix& corr) {
  std::vector<int> seen;
  for (const auto& c : clustering.clusters) {
    if (c.members.empty() || c.members.front() != c.pivot) return false;
    for (int m : c.members) {
      if (m != c.pivot && !(corr(c.pivot, m) >= clustering.tau)) return false;
      seen.push_back(m);
    }
  }
  std::sort(seen.begin(), seen.end());
  return seen == active_metrics(corr);
}

std::vector<TauCount> sweep_tau(const CorrelationMatrix& corr, const std::vector<double>& taus, int restarts,
                                std::uint64_t seed) {
  std::vector<TauCount> out;
  for (double tau : taus)
    out.push_back({tau, static_cast<int>(best_clustering(corr, tau, restarts, seed).size())});
  return out;
}

TauSearch find_tau_for_k(const CorrelationMatrix& corr, int k, int restarts, std::uint64_t seed, double tol) {
  const auto active = active_metrics(corr);
  if (k < 1 || k > static_cast<int>(active.size()))
    throw std::out_of_range("find_tau_for_k: k must lie in [1, " + std::to_string(active.size()) + "]");

  TauSearch best;
  bool have = false;
  auto consider = [&](Clustering c) {
    const int count = static_cast<int>(c.size());
    if (!have) {
      best.clustering = std::move(c);
      have = true;
    } else {
      const int cur = static_cast<int>(best.clustering.size());
      const int d_new = std::abs(count - k), d_cur = std::abs(cur - k);
      if (d_new < d_cur || (d_new == d_cur && count < cur)) best.clustering = std::move(c);
    }
    best.exact = static_cast<int>(best.clustering.size()) == k;
    return best.exact;
  };

  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    Clustering c = best_clustering(corr, mid, restarts, seed);
    const int count = static_cast<int>(c.size());
    if (consider(std::move(c))) return best;
    (count < k ? lo : hi) = mid;
  }

  std::vector<double> candidates;
  for (int g = 1; g < 20; ++g) candidates.push_back(g / 20.0);
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      const double r = corr(active[a], active[b]);
      if (!(r > 0.0 && r < 1.0)) continue;
      candidates.push_back(r);
      const double above = std::nextafter(r, 1.0);
      if (above < 1.0) candidates.push_back(above);
    }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (double tau : candidates)
    if (consider(best_clustering(corr, tau, restarts, seed))) return best;
  return best;
}

}  // namespace fairrep

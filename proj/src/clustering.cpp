#include "xmm/clustering.hpp"

#include <deque>
#include <string>

#include "xmm/error.hpp"
#include "xmm/parallel.hpp"

namespace xmm {

PseudoLabels dbscan(const EmbeddingSet& set, const DbscanParams& params) {
  if (!(params.eps > 0.0)) throw InvalidConfig("eps must be positive");
  if (params.min_pts < 1) throw InvalidConfig("min_pts must be >= 1");

  const std::size_t n = set.size();
  const double eps2 = params.eps * params.eps;
  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(n, [&](std::size_t i) {
    const auto a = set.vectors.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto b = set.vectors.row(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        d2 += t * t;
      }
      if (d2 <= eps2) neighbours[i].push_back(j);
    }
  });

  const auto min_pts = static_cast<std::size_t>(params.min_pts);
  auto is_core = [&](std::size_t i) { return neighbours[i].size() >= min_pts; };

  PseudoLabels out;
  out.labels.assign(n, kNoise);
  std::deque<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (out.labels[seed] != kNoise || !is_core(seed)) continue;
    const int cluster = out.cluster_count++;
    out.labels[seed] = cluster;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (!is_core(p)) continue;
      for (std::size_t q : neighbours[p]) {
        if (out.labels[q] != kNoise) continue;
        out.labels[q] = cluster;
        frontier.push_back(q);
      }
    }
  }
  if (out.cluster_count == 0)
    throw NoClusters("no core points at eps=" + std::to_string(params.eps) +
                     " min_pts=" + std::to_string(params.min_pts));
  return out;
}

Centroids centroids(const EmbeddingSet& set, const PseudoLabels& labels) {
  if (labels.cluster_count < 1) throw EmptyCluster("no clusters");
  if (labels.size() != set.size())
    throw DimMismatch("labels cover " + std::to_string(labels.size()) + " rows, set has " +
                      std::to_string(set.size()));
  const auto k = static_cast<std::size_t>(labels.cluster_count);
  Centroids c;
  c.matrix = Matrix(k, set.dim());
  c.counts.assign(k, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int l = labels.labels[i];
    if (l < 0) continue;
    if (l >= labels.cluster_count) throw EmptyCluster("label " + std::to_string(l) + " out of range");
    auto dst = c.matrix.row(static_cast<std::size_t>(l));
    const auto src = set.vectors.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    ++c.counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t r = 0; r < k; ++r) {
    if (c.counts[r] == 0) throw EmptyCluster("cluster " + std::to_string(r));
    auto row = c.matrix.row(r);
    for (double& v : row) v /= static_cast<double>(c.counts[r]);
    try {
      normalize_row(row);
    } catch (const ZeroVector&) {
      throw ZeroVector("centroid " + std::to_string(r) + " has zero mean");
    }
  }
  return c;
}

}  // namespace xmm

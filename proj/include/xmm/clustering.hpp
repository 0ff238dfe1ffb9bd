#pragma once

#include "xmm/data_model.hpp"

namespace xmm {

struct DbscanParams {
  double eps = 0.6;
  int min_pts = 4;
};

/// Density clustering over Euclidean distance between rows. A point is core
/// when at least min_pts points (itself included) lie within eps. Clusters
/// are numbered in the order their first core point is met while scanning
/// rows; a border point joins the first cluster that reaches it. Throws
/// NoClusters when no core point exists.
PseudoLabels dbscan(const EmbeddingSet& set, const DbscanParams& params);

/// Normalized cluster means, one row per cluster. Noise rows are ignored.
struct Centroids {
  Matrix matrix;
  std::vector<std::size_t> counts;

  std::size_t size() const noexcept { return matrix.rows(); }
};

Centroids centroids(const EmbeddingSet& set, const PseudoLabels& labels);

}  // namespace xmm

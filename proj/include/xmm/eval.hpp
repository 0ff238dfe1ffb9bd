#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xmm/data_model.hpp"
#include "xmm/matching.hpp"

namespace xmm {

struct RetrievalReport {
  double map = 0.0;
  // Rank-1, Rank-10, Rank-20 accuracy.
  double rank1 = 0.0;
  double rank10 = 0.0;
  double rank20 = 0.0;
  double minp = 0.0;
  std::size_t n_queries = 0;   // queries with at least one positive
  std::size_t n_excluded = 0;  // queries without any positive

  std::string to_text() const;  // key=value lines
};

/// Per-query ranked gallery indices: descending dot-product similarity, ties
/// broken by ascending gallery index.
std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery);

/// mAP, CMC and mINP for cross-modality retrieval. Both sets need ids.
RetrievalReport retrieve_and_score(const EmbeddingSet& query, const EmbeddingSet& gallery);

/// Scores one ranked list of positive flags; exposed for tests.
struct QueryScore {
  double ap = 0.0;
  double inp = 0.0;
  std::size_t first_hit = 0;  // 1-based rank of the first positive
};
QueryScore score_ranking(const std::vector<bool>& positive_at_rank);

struct MatchQuality {
  double pair_precision = 0.0;
  double pair_recall = 0.0;
  double coverage = 0.0;
  std::size_t pairs = 0;
  std::size_t correct_pairs = 0;
};

/// Majority ground-truth identity per cluster; ties go to the lowest identity.
std::vector<long long> majority_identity(const PseudoLabels& labels, const std::vector<long long>& ids);

/// A pair (a, b) of q is correct when visible cluster a and infrared cluster
/// b share their majority identity.
MatchQuality match_quality(const MatchResult& match, const PseudoLabels& labels_v,
                           const PseudoLabels& labels_r, const std::vector<long long>& ids_v,
                           const std::vector<long long>& ids_r);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges spanning [0, 2]
  std::vector<std::size_t> counts;

  std::size_t mode() const;  // lowest bin among the most populated
  std::string to_text() const;  // "bin_left count" lines
};

/// Distances between n_pairs same-identity cross-modality pairs sampled
/// uniformly (with replacement) from all such pairs.
Histogram positive_distance_histogram(const EmbeddingSet& visible, const EmbeddingSet& infrared,
                                      std::size_t n_pairs, std::size_t bins, std::uint64_t seed);

/// Exact mean Euclidean distance over all same-identity cross-modality pairs.
double mean_positive_distance(const EmbeddingSet& visible, const EmbeddingSet& infrared);

}  // namespace xmm

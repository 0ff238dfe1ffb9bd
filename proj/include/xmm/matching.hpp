#pragma once

#include <span>
#include <vector>

#include "xmm/clustering.hpp"
#include "xmm/matrix.hpp"

namespace xmm {

enum class QueryDirection { VisibleQuery, InfraredQuery };

/// How a query side with more clusters than the gallery side is matched.
///  - InjectiveRounds: Kuhn-Munkres on the still-unmatched queries against all
///    galleries, repeated until every query has a partner. Each round is an
///    injective assignment, so gallery load differs by at most one per round.
///  - ArgminPerRow: every query takes its nearest gallery (debug only; it
///    permits the collapse onto a few galleries the rounds policy avoids).
enum class AssignPolicy { InjectiveRounds, ArgminPerRow };

/// K_v x K_r Euclidean distances between centroids.
Matrix cost_matrix(const Centroids& visible, const Centroids& infrared);
Matrix cost_matrix(const Matrix& visible, const Matrix& infrared);

/// One matched gallery index per query cluster. For VisibleQuery the queries
/// are the rows of `cost`, for InfraredQuery the columns.
std::vector<std::size_t> assign_one_to_one(const Matrix& cost, QueryDirection direction,
                                           AssignPolicy policy = AssignPolicy::InjectiveRounds);

/// Marks, for every query, each gallery at least as close as its anchor.
BoolMatrix extend_matches(const Matrix& cost, std::span<const std::size_t> anchors,
                          QueryDirection direction);

struct MatchResult {
  Matrix cost;
  BoolMatrix q_v;  // visible-query relation
  BoolMatrix q_r;  // infrared-query relation
  BoolMatrix q;    // q_v | q_r
  std::vector<std::size_t> anchors_v;  // infrared index per visible cluster
  std::vector<std::size_t> anchors_r;  // visible index per infrared cluster

  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;
};

MatchResult mbccm(const Matrix& cost, AssignPolicy policy = AssignPolicy::InjectiveRounds);
MatchResult bccm(const Matrix& cost, AssignPolicy policy = AssignPolicy::InjectiveRounds);

inline MatchResult mbccm(const Centroids& cv, const Centroids& cr,
                         AssignPolicy policy = AssignPolicy::InjectiveRounds) {
  return mbccm(cost_matrix(cv, cr), policy);
}
inline MatchResult bccm(const Centroids& cv, const Centroids& cr,
                        AssignPolicy policy = AssignPolicy::InjectiveRounds) {
  return bccm(cost_matrix(cv, cr), policy);
}

}  // namespace xmm

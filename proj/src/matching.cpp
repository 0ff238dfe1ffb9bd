#include "xmm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xmm/error.hpp"
#include "xmm/kuhn_munkres.hpp"
#include "xmm/parallel.hpp"

namespace xmm {

namespace {

std::vector<std::size_t> rounds_assignment(const Matrix& cost) {
  const std::size_t queries = cost.rows();
  const std::size_t galleries = cost.cols();
  const double pad = *std::max_element(cost.data().begin(), cost.data().end()) + 1.0;

  std::vector<std::size_t> out(queries);
  std::vector<std::size_t> pending(queries);
  for (std::size_t i = 0; i < queries; ++i) pending[i] = i;

  while (!pending.empty()) {
    Matrix sub(pending.size(), galleries);
    for (std::size_t r = 0; r < pending.size(); ++r)
      std::copy_n(cost.row(pending[r]).begin(), galleries, sub.row(r).begin());
    const auto sol = kuhn_munkres_padded(sub, pad);

    std::vector<std::size_t> still;
    for (std::size_t r = 0; r < pending.size(); ++r) {
      if (sol[r] >= 0)
        out[pending[r]] = static_cast<std::size_t>(sol[r]);
      else
        still.push_back(pending[r]);
    }
    pending = std::move(still);
  }
  return out;
}

std::vector<std::size_t> argmin_assignment(const Matrix& cost) {
  std::vector<std::size_t> out(cost.rows());
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    const auto row = cost.row(r);
    out[r] = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

BoolMatrix anchors_only(std::size_t rows, std::size_t cols, std::span<const std::size_t> anchors,
                        QueryDirection direction) {
  BoolMatrix q(rows, cols);
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (direction == QueryDirection::VisibleQuery)
      q.set(k, anchors[k]);
    else
      q.set(anchors[k], k);
  }
  return q;
}

MatchResult bilateral(const Matrix& cost, AssignPolicy policy, bool extend) {
  if (cost.rows() == 0 || cost.cols() == 0) throw EmptyMatch("cost matrix has an empty side");
  MatchResult m;
  m.cost = cost;
  m.anchors_v = assign_one_to_one(cost, QueryDirection::VisibleQuery, policy);
  m.anchors_r = assign_one_to_one(cost, QueryDirection::InfraredQuery, policy);
  if (extend) {
    m.q_v = extend_matches(cost, m.anchors_v, QueryDirection::VisibleQuery);
    m.q_r = extend_matches(cost, m.anchors_r, QueryDirection::InfraredQuery);
  } else {
    m.q_v = anchors_only(cost.rows(), cost.cols(), m.anchors_v, QueryDirection::VisibleQuery);
    m.q_r = anchors_only(cost.rows(), cost.cols(), m.anchors_r, QueryDirection::InfraredQuery);
  }
  m.q = m.q_v | m.q_r;
  return m;
}

}  // namespace

Matrix cost_matrix(const Matrix& visible, const Matrix& infrared) {
  if (visible.cols() != infrared.cols())
    throw DimMismatch("centroid dims " + std::to_string(visible.cols()) + " vs " +
                      std::to_string(infrared.cols()));
  Matrix p(visible.rows(), infrared.rows());
  std::vector<double> sq_r(infrared.rows());
  for (std::size_t j = 0; j < infrared.rows(); ++j) sq_r[j] = dot(infrared.row(j), infrared.row(j));
  parallel_for(visible.rows(), [&](std::size_t i) {
    const auto cv = visible.row(i);
    const double sq_v = dot(cv, cv);
    for (std::size_t j = 0; j < infrared.rows(); ++j) {
      const double radicand = sq_v + sq_r[j] - 2.0 * dot(cv, infrared.row(j));
      p(i, j) = std::sqrt(std::max(0.0, radicand));
    }
  });
  return p;
}

Matrix cost_matrix(const Centroids& visible, const Centroids& infrared) {
  return cost_matrix(visible.matrix, infrared.matrix);
}

std::vector<std::size_t> assign_one_to_one(const Matrix& cost, QueryDirection direction,
                                           AssignPolicy policy) {
  if (cost.rows() == 0 || cost.cols() == 0) return {};
  const Matrix oriented = direction == QueryDirection::VisibleQuery ? cost : cost.transposed();
  return policy == AssignPolicy::InjectiveRounds ? rounds_assignment(oriented)
                                                 : argmin_assignment(oriented);
}

BoolMatrix extend_matches(const Matrix& cost, std::span<const std::size_t> anchors,
                          QueryDirection direction) {
  BoolMatrix q(cost.rows(), cost.cols());
  const bool by_row = direction == QueryDirection::VisibleQuery;
  const std::size_t queries = by_row ? cost.rows() : cost.cols();
  const std::size_t galleries = by_row ? cost.cols() : cost.rows();
  if (anchors.size() != queries)
    throw DimMismatch("expected " + std::to_string(queries) + " anchors, got " +
                      std::to_string(anchors.size()));
  for (std::size_t k = 0; k < queries; ++k) {
    if (anchors[k] >= galleries) throw SlotOutOfRange("anchor " + std::to_string(anchors[k]));
    auto at = [&](std::size_t g) { return by_row ? cost(k, g) : cost(g, k); };
    const double threshold = at(anchors[k]);
    for (std::size_t g = 0; g < galleries; ++g) {
      if (at(g) <= threshold) {
        if (by_row)
          q.set(k, g);
        else
          q.set(g, k);
      }
    }
  }
  return q;
}

std::vector<std::pair<std::size_t, std::size_t>> MatchResult::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < q.rows(); ++a)
    for (std::size_t b = 0; b < q.cols(); ++b)
      if (q(a, b)) out.emplace_back(a, b);
  return out;
}

MatchResult mbccm(const Matrix& cost, AssignPolicy policy) { return bilateral(cost, policy, true); }
MatchResult bccm(const Matrix& cost, AssignPolicy policy) { return bilateral(cost, policy, false); }

}  // namespace xmm

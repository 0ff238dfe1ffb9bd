#pragma once

#include <vector>

#include "xmm/matrix.hpp"

namespace xmm {

/// Minimum-cost assignment for a rows x cols cost matrix with rows <= cols:
/// every row receives a distinct column. Returns the column for each row.
/// Shortest-augmenting-path Kuhn-Munkres with dual potentials, O(rows^2 cols).
/// Among equal-cost augmenting choices the lowest column index wins.
std::vector<std::size_t> kuhn_munkres(const Matrix& cost);

/// Pads a rectangular matrix to square with `pad` (which must exceed every
/// entry), solves, and reports the real column per row or -1 when the row was
/// matched to padding.
std::vector<long> kuhn_munkres_padded(const Matrix& cost, double pad);

}  // namespace xmm

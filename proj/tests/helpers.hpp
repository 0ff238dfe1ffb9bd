#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "xmm/data_model.hpp"
#include "xmm/matrix.hpp"

namespace testing {

inline xmm::Matrix from_grid(const oracle::Grid& g) {
  xmm::Matrix m(g.size(), g.empty() ? 0 : g[0].size());
  for (std::size_t r = 0; r < g.size(); ++r)
    for (std::size_t c = 0; c < g[r].size(); ++c) m(r, c) = g[r][c];
  return m;
}

inline oracle::Grid to_grid(const xmm::Matrix& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline std::vector<double> unit_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(d);
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : v) {
      x = n(rng);
      s += x * x;
    }
  } while (s < 1e-6);
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

inline xmm::Matrix unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t d) {
  xmm::Matrix m(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = unit_vector(rng, d);
    for (std::size_t c = 0; c < d; ++c) m(r, c) = v[c];
  }
  return m;
}

inline xmm::EmbeddingSet make_set(xmm::Matrix vectors, xmm::Modality modality,
                                  std::vector<long long> ids = {}) {
  xmm::EmbeddingSet s;
  s.vectors = std::move(vectors);
  s.modality = modality;
  s.ids = std::move(ids);
  return s;
}

}  // namespace testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "xmm/matrix.hpp"

namespace xmm {

enum class Modality { Visible, Infrared, IntermediateVisible };

std::string_view to_string(Modality m);

/// Per-modality table of unit-norm features. `ids` is either empty (no
/// ground truth) or holds one identity per row.
struct EmbeddingSet {
  Matrix vectors;
  Modality modality = Modality::Visible;
  std::vector<long long> ids;

  std::size_t size() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
  bool has_ids() const noexcept { return !ids.empty(); }
};

inline constexpr int kNoise = -1;

/// Cluster index per instance; kNoise marks DBSCAN noise.
struct PseudoLabels {
  std::vector<int> labels;
  int cluster_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  // Instance indices per cluster, in ascending order.
  std::vector<std::vector<std::size_t>> members() const;
};

/// Divides every row by its Euclidean norm. Rows whose norm already equals 1
/// within 1e-12 are left untouched, which makes the operation exactly
/// idempotent. Throws ZeroVector when a row norm is below 1e-12.
Matrix normalize(Matrix vectors);
void normalize_row(std::span<double> row);

EmbeddingSet load_embeddings(const std::filesystem::path& path, Modality modality);
void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);

// Parse/format helpers behind the file functions; exposed for the CLI and
// memory bank checkpoints.
EmbeddingSet parse_embeddings(std::string_view text, Modality modality);
std::string format_embeddings(const EmbeddingSet& set);

/// Noise-perturbed copy of a visible set standing in for the augmented
/// intermediate modality. Noise per coordinate has standard deviation
/// sigma / sqrt(d), so `sigma` is the expected norm of the perturbation.
EmbeddingSet make_intermediate(const EmbeddingSet& visible, double sigma, std::uint64_t seed);

}  // namespace xmm

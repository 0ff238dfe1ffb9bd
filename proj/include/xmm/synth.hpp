#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "xmm/data_model.hpp"

namespace xmm {

/// Ground-truth-labelled cross-modality dataset recipe.
///
/// Noise magnitudes are expressed as expected vector norms: a Gaussian
/// perturbation with scale s draws each coordinate with standard deviation
/// s / sqrt(dim).
struct SynthConfig {
  int n_ids = 20;
  int per_id_per_modality = 16;
  int dim = 32;
  double intra_sigma = 0.05;
  // Norm of the fixed per-identity offset applied to infrared samples.
  double modality_shift = 0.3;
  // Probability that an identity's visible samples form two sub-clusters.
  double split_prob = 0.0;
  // Probability that an identity's infrared samples form two sub-clusters.
  double infrared_split_prob = 0.0;
  // Norm of the offset separating the two sub-cluster anchors of a split.
  double split_offset = 0.5;
  // Anchors are drawn around a shared random centre with this scale; unset
  // means anchors are uniform on the sphere.
  std::optional<double> anchor_spread;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthData {
  EmbeddingSet visible;
  EmbeddingSet infrared;
  // Unit anchor per identity (before modality shift), row k = identity k.
  Matrix anchors;
  // Per-identity modality offsets of norm modality_shift.
  Matrix shifts;
  // True for identities whose visible (resp. infrared) samples were split.
  std::vector<bool> split;
  std::vector<bool> infrared_split;
};

/// Visible rows are grouped by identity (per_id_per_modality rows each, in
/// identity order); infrared rows likewise. For split identities the second
/// half of that modality's rows sits around an offset anchor.
SynthData generate(const SynthConfig& cfg);

}  // namespace xmm

#pragma once

#include <optional>
#include <span>

#include "xmm/clustering.hpp"
#include "xmm/data_model.hpp"

namespace xmm {

enum class BankKind { SpecificVisible, SpecificInfrared, AgnosticVisibleBased, AgnosticInfraredBased };

/// Cluster prototypes updated by exponential momentum. Prototypes are kept
/// unit-norm: every update renormalizes the touched slot.
class MemoryBank {
 public:
  MemoryBank(Matrix prototypes, BankKind kind, double momentum);

  const Matrix& prototypes() const noexcept { return prototypes_; }
  BankKind kind() const noexcept { return kind_; }
  double momentum() const noexcept { return momentum_; }
  std::size_t size() const noexcept { return prototypes_.rows(); }
  std::size_t dim() const noexcept { return prototypes_.cols(); }

  /// prototype[slot] <- normalize(mu * prototype[slot] + (1 - mu) * feature).
  void momentum_update(std::size_t slot, std::span<const double> feature);

 private:
  Matrix prototypes_;
  BankKind kind_;
  double momentum_;
};

struct MemoryBanks {
  MemoryBank specific_v;
  MemoryBank specific_r;
  MemoryBank agnostic_v;
  MemoryBank agnostic_r;
};

/// Both banks of a modality start from that modality's centroids; the copies
/// are independent afterwards.
MemoryBanks init_banks(const Centroids& visible, const Centroids& infrared, double momentum);

struct RoutedInstance {
  std::span<const double> feature;
  Modality modality = Modality::Visible;
  std::optional<std::size_t> label_v;
  std::optional<std::size_t> label_r;
};

struct RoutingPolicy {
  // Off during per-modality pretraining and for the Baseline ablation; then
  // only the modality-specific bank of the instance's own modality moves.
  bool agnostic = true;
  bool intermediate_updates_agnostic_r = true;
};

/// Applies one instance to the banks:
///   visible/intermediate -> specific_v[label_v]
///   infrared             -> specific_r[label_r]
///   every instance       -> agnostic_v[label_v], agnostic_r[label_r]
/// Throws MissingLabel when a label needed by the routing is absent.
void route_update(MemoryBanks& banks, const RoutedInstance& instance,
                  const RoutingPolicy& policy = {});

/// Bank contents as an embedding set (ids = slot indices) for checkpoints.
EmbeddingSet to_embedding_set(const MemoryBank& bank);

}  // namespace xmm

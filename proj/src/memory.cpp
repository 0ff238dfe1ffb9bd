#include "xmm/memory.hpp"

#include <string>

#include "xmm/error.hpp"

namespace xmm {

MemoryBank::MemoryBank(Matrix prototypes, BankKind kind, double momentum)
    : prototypes_(std::move(prototypes)), kind_(kind), momentum_(momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw InvalidConfig("momentum must be in [0,1]");
}

void MemoryBank::momentum_update(std::size_t slot, std::span<const double> feature) {
  if (slot >= size())
    throw SlotOutOfRange("slot " + std::to_string(slot) + " of " + std::to_string(size()));
  if (feature.size() != dim())
    throw DimMismatch("feature dim " + std::to_string(feature.size()) + " vs bank dim " +
                      std::to_string(dim()));
  auto proto = prototypes_.row(slot);
  for (std::size_t j = 0; j < proto.size(); ++j)
    proto[j] = momentum_ * proto[j] + (1.0 - momentum_) * feature[j];
  normalize_row(proto);
}

MemoryBanks init_banks(const Centroids& visible, const Centroids& infrared, double momentum) {
  return MemoryBanks{
      MemoryBank(visible.matrix, BankKind::SpecificVisible, momentum),
      MemoryBank(infrared.matrix, BankKind::SpecificInfrared, momentum),
      MemoryBank(visible.matrix, BankKind::AgnosticVisibleBased, momentum),
      MemoryBank(infrared.matrix, BankKind::AgnosticInfraredBased, momentum),
  };
}

void route_update(MemoryBanks& banks, const RoutedInstance& instance, const RoutingPolicy& policy) {
  const bool infrared = instance.modality == Modality::Infrared;
  const bool intermediate = instance.modality == Modality::IntermediateVisible;
  auto need = [&](const std::optional<std::size_t>& label, const char* which) {
    if (!label)
      throw MissingLabel(std::string(which) + " label missing for " +
                         std::string(to_string(instance.modality)) + " instance");
    return *label;
  };

  const bool touch_agnostic_r = policy.agnostic && (!intermediate || policy.intermediate_updates_agnostic_r);
  // Resolve every label before mutating so a failure leaves the banks intact.
  const std::size_t own = infrared ? need(instance.label_r, "infrared") : need(instance.label_v, "visible");
  const std::size_t slot_v = policy.agnostic ? need(instance.label_v, "visible") : 0;
  const std::size_t slot_r = touch_agnostic_r ? need(instance.label_r, "infrared") : 0;

  auto check = [](const MemoryBank& bank, std::size_t slot) {
    if (slot >= bank.size())
      throw SlotOutOfRange("slot " + std::to_string(slot) + " of " + std::to_string(bank.size()));
  };
  check(infrared ? banks.specific_r : banks.specific_v, own);
  if (policy.agnostic) check(banks.agnostic_v, slot_v);
  if (touch_agnostic_r) check(banks.agnostic_r, slot_r);

  if (infrared)
    banks.specific_r.momentum_update(own, instance.feature);
  else
    banks.specific_v.momentum_update(own, instance.feature);
  if (policy.agnostic) banks.agnostic_v.momentum_update(slot_v, instance.feature);
  if (touch_agnostic_r) banks.agnostic_r.momentum_update(slot_r, instance.feature);
}

EmbeddingSet to_embedding_set(const MemoryBank& bank) {
  EmbeddingSet s;
  s.vectors = bank.prototypes();
  const bool infrared =
      bank.kind() == BankKind::SpecificInfrared || bank.kind() == BankKind::AgnosticInfraredBased;
  s.modality = infrared ? Modality::Infrared : Modality::Visible;
  s.ids.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) s.ids[i] = static_cast<long long>(i);
  return s;
}

}  // namespace xmm

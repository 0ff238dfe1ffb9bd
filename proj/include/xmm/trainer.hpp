#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xmm/clustering.hpp"
#include "xmm/data_model.hpp"
#include "xmm/eval.hpp"
#include "xmm/matching.hpp"
#include "xmm/memory.hpp"
#include "xmm/objective.hpp"

namespace xmm {

/// Which components take part once the matching stage starts.
///   Baseline    modality-specific banks only, no matching
///   BCCM_MSMA   one-to-one bilateral matching + agnostic banks
///   MBCCM_MSMA  many-to-many matching + agnostic banks
///   Full        MBCCM_MSMA + consistency constraint
enum class Ablation { Baseline, BCCM_MSMA, MBCCM_MSMA, Full };

std::string_view to_string(Ablation a);
std::optional<Ablation> parse_ablation(std::string_view s);

struct TrainConfig {
  int epochs = 80;
  int pretrain_epochs = 40;
  int ids_per_batch = 12;
  int instances_per_id = 12;
  double lr = 3.5e-4;
  std::vector<int> lr_decay_epochs = {20, 50, 70};
  double lr_decay_factor = 10.0;
  Ablation ablation = Ablation::Full;
  HyperParams hp;
  DbscanParams dbscan;
  // Expected norm of the perturbation that derives the intermediate stream.
  double intermediate_sigma = 0.1;
  AssignPolicy assign_policy = AssignPolicy::InjectiveRounds;
  // Banks are rebuilt from fresh centroids every epoch; when false they are
  // carried over while both cluster counts stay unchanged.
  bool rebuild_banks = true;
  bool intermediate_updates_agnostic_r = true;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(int epoch) const;
  bool matching_active(int epoch) const {
    return epoch >= pretrain_epochs && ablation != Ablation::Baseline;
  }
};

/// Small-batch preset for desk-scale runs (4 identities x 4 instances).
TrainConfig desk_preset();

/// Indices into the visible (and its intermediate twin) and infrared tables.
struct BatchSample {
  std::size_t v_index = 0;
  std::size_t r_index = 0;
  std::size_t y_v = 0;
  std::size_t y_r = 0;
};

/// Draws ids_per_batch true entries (a, b) of the match (without replacement
/// while enough entries remain), then instances_per_id members of visible
/// cluster a and of infrared cluster b, paired by position. Members are
/// drawn without replacement unless the cluster is too small.
std::vector<BatchSample> sample_batch(const PseudoLabels& labels_v, const PseudoLabels& labels_r,
                                      const MatchResult& match, const TrainConfig& cfg,
                                      std::mt19937_64& rng);

/// Pretraining/Baseline sampler: visible and infrared clusters are drawn
/// independently, so the labels in an item are not shared.
std::vector<BatchSample> sample_unpaired_batch(const PseudoLabels& labels_v,
                                               const PseudoLabels& labels_r,
                                               const TrainConfig& cfg, std::mt19937_64& rng);

struct StepRecord {
  int epoch = 0;
  int step = 0;
  double l_ms = 0.0, l_ma = 0.0, l_cc = 0.0, total = 0.0;
  int k_v = 0, k_r = 0;
};

struct EpochSummary {
  int epoch = 0;
  double lr = 0.0;
  double l_ms = 0.0, l_ma = 0.0, l_cc = 0.0, total = 0.0;
  int k_v = 0, k_r = 0;
  bool matched = false;
  std::optional<MatchQuality> match_quality;
  std::optional<double> mean_positive_distance;
  std::optional<double> map;
};

/// Mutable training tables: the parameters being optimized.
struct TrainingSets {
  EmbeddingSet visible;
  EmbeddingSet intermediate;
  EmbeddingSet infrared;
};

struct EpochState {
  PseudoLabels labels_v;
  PseudoLabels labels_r;
  std::optional<MatchResult> match;
  MemoryBanks banks;
  int epoch = 0;
};

/// Runs one epoch of steps over the current state, updating the feature
/// tables and banks in place. Returns the per-step records.
std::vector<StepRecord> train_epoch(EpochState& state, TrainingSets& sets, const TrainConfig& cfg,
                                    std::mt19937_64& rng);

struct TrainResult {
  EmbeddingSet visible;
  EmbeddingSet infrared;
  std::vector<StepRecord> steps;
  std::vector<EpochSummary> epochs;
  // Embeddings when the last pretraining epoch finished (absent when
  // pretrain_epochs == 0).
  std::optional<std::pair<EmbeddingSet, EmbeddingSet>> after_pretrain;
  std::optional<EpochState> final_state;
};

TrainResult run(const EmbeddingSet& visible, const EmbeddingSet& infrared, const TrainConfig& cfg);

/// "epoch step l_ms l_ma l_cc total K_v K_r" per line.
std::string format_metrics_log(const std::vector<StepRecord>& steps);
std::string format_epoch_summaries(const std::vector<EpochSummary>& epochs);

}  // namespace xmm

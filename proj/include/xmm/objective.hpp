#pragma once

#include <optional>
#include <span>
#include <vector>

#include "xmm/memory.hpp"

namespace xmm {

struct HyperParams {
  double tau = 0.05;
  double alpha = 0.9;
  double beta = 0.5;
  double mu = 0.1;

  void validate() const;
};

// Similarities are plain dot products: features and prototypes are unit-norm,
// so this equals the cosine, and the gradients below are the unprojected
// Euclidean gradients with respect to the feature.

/// -log softmax(bank * f / tau)[positive]. When `grad` is non-empty the
/// gradient with respect to f is accumulated into it (scaled by `weight`).
double contrastive_loss(std::span<const double> f, const MemoryBank& bank, std::size_t positive,
                        double tau, std::span<double> grad = {}, double weight = 1.0);

/// softmax(bank * f / tau).
std::vector<double> predict(std::span<const double> f, const MemoryBank& bank, double tau);

/// Symmetric KL between the predictions of two same-size banks, halved.
/// Throws ScaleMismatch when the banks differ in size.
double consistency_loss(std::span<const double> f, const MemoryBank& specific,
                        const MemoryBank& agnostic, double tau, std::span<double> grad = {},
                        double weight = 1.0);

/// One sampled triplet: a visible instance, its intermediate twin, and an
/// infrared instance, with the pseudo labels they share.
struct BatchItem {
  std::span<const double> v;
  std::span<const double> v_hat;
  std::span<const double> r;
  std::optional<std::size_t> y_v;
  std::optional<std::size_t> y_r;
};

double l_ms(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau);
double l_ma(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau);
double l_cc(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau);

struct ItemGrads {
  std::vector<double> v, v_hat, r;
};

struct LossReport {
  double l_ms = 0.0;
  double l_ma = 0.0;
  double l_cc = 0.0;
  double total = 0.0;
  std::vector<ItemGrads> grads;  // d total / d feature, one entry per batch item
};

// Which optional terms enter the total; disabled terms are reported as 0.
struct LossTerms {
  bool agnostic = true;
  bool consistency = true;
};

/// total = l_ms + alpha * l_ma + beta * l_cc, each term a mean over the batch,
/// with gradients of the total for every batch feature. Prototypes are
/// treated as constants.
LossReport total_loss(std::span<const BatchItem> batch, const MemoryBanks& banks,
                      const HyperParams& hp, LossTerms terms = {}, bool with_grads = true);

/// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> values);

}  // namespace xmm

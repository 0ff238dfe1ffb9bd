#include "xmm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xmm/error.hpp"
#include "xmm/parallel.hpp"

namespace xmm {

namespace {

std::vector<double> logits(std::span<const double> f, const MemoryBank& bank, double tau) {
  if (f.size() != bank.dim())
    throw DimMismatch("feature dim " + std::to_string(f.size()) + " vs bank dim " +
                      std::to_string(bank.dim()));
  std::vector<double> z(bank.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = dot(f, bank.prototypes().row(k)) / tau;
  return z;
}

// Softmax in place; returns the log-partition.
double softmax_inplace(std::vector<double>& z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return peak + std::log(sum);
}

// grad += scale * bank^T * coeff
void accumulate(std::span<double> grad, const MemoryBank& bank, std::span<const double> coeff,
                double scale) {
  for (std::size_t k = 0; k < coeff.size(); ++k) {
    const double c = coeff[k] * scale;
    if (c == 0.0) continue;
    const auto proto = bank.prototypes().row(k);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += c * proto[j];
  }
}

std::size_t require(const std::optional<std::size_t>& label, const char* which) {
  if (!label) throw MissingLabel(std::string(which) + " label missing from batch item");
  return *label;
}

void require_nonempty(std::span<const BatchItem> batch) {
  if (batch.empty()) throw EmptyBatch("batch has no items");
}

struct ItemTerms {
  double ms = 0.0, ma = 0.0, cc = 0.0;
};

// Per-item term sums; gradients (if requested) are d(weighted item total).
ItemTerms evaluate_item(const BatchItem& item, const MemoryBanks& banks, const HyperParams& hp,
                        LossTerms terms, ItemGrads* grads, double scale) {
  ItemTerms t;
  const std::size_t yv = require(item.y_v, "visible");
  const std::size_t yr = require(item.y_r, "infrared");
  const std::span<const double> feats[3] = {item.v, item.v_hat, item.r};
  std::span<double> g[3] = {};
  if (grads) g[0] = grads->v, g[1] = grads->v_hat, g[2] = grads->r;

  t.ms += contrastive_loss(feats[0], banks.specific_v, yv, hp.tau, g[0], scale);
  t.ms += contrastive_loss(feats[1], banks.specific_v, yv, hp.tau, g[1], scale);
  t.ms += contrastive_loss(feats[2], banks.specific_r, yr, hp.tau, g[2], scale);
  if (terms.agnostic) {
    for (int s = 0; s < 3; ++s) {
      t.ma += contrastive_loss(feats[s], banks.agnostic_v, yv, hp.tau, g[s], scale * hp.alpha);
      t.ma += contrastive_loss(feats[s], banks.agnostic_r, yr, hp.tau, g[s], scale * hp.alpha);
    }
  }
  if (terms.consistency) {
    for (int s = 0; s < 3; ++s) {
      t.cc += consistency_loss(feats[s], banks.specific_v, banks.agnostic_v, hp.tau, g[s],
                               scale * hp.beta);
      t.cc += consistency_loss(feats[s], banks.specific_r, banks.agnostic_r, hp.tau, g[s],
                               scale * hp.beta);
    }
  }
  return t;
}

}  // namespace

void HyperParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidConfig("tau must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidConfig("alpha and beta must be >= 0");
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidConfig("mu must be in [0,1]");
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double contrastive_loss(std::span<const double> f, const MemoryBank& bank, std::size_t positive,
                        double tau, std::span<double> grad, double weight) {
  if (positive >= bank.size())
    throw SlotOutOfRange("positive " + std::to_string(positive) + " of " + std::to_string(bank.size()));
  auto z = logits(f, bank, tau);
  const double positive_logit = z[positive];
  const double log_partition = softmax_inplace(z);
  if (!grad.empty()) {
    z[positive] -= 1.0;  // softmax - onehot
    accumulate(grad, bank, z, weight / tau);
  }
  return log_partition - positive_logit;
}

std::vector<double> predict(std::span<const double> f, const MemoryBank& bank, double tau) {
  auto z = logits(f, bank, tau);
  softmax_inplace(z);
  return z;
}

double consistency_loss(std::span<const double> f, const MemoryBank& specific,
                        const MemoryBank& agnostic, double tau, std::span<double> grad,
                        double weight) {
  if (specific.size() != agnostic.size())
    throw ScaleMismatch("banks hold " + std::to_string(specific.size()) + " and " +
                        std::to_string(agnostic.size()) + " prototypes");
  auto za = logits(f, specific, tau);
  auto zb = logits(f, agnostic, tau);
  const std::size_t k = za.size();

  // log p - log q = (za - zb) - (logZa - logZb); the constant cancels against
  // sum(p - q) = 0, leaving 0.5 * sum (p - q) * (za - zb).
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = za[i] - zb[i];
  auto p = za;
  auto q = zb;
  softmax_inplace(p);
  softmax_inplace(q);

  double loss = 0.0;
  for (std::size_t i = 0; i < k; ++i) loss += (p[i] - q[i]) * w[i];
  loss *= 0.5;

  if (!grad.empty()) {
    double pw = 0.0, qw = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      pw += p[i] * w[i];
      qw += q[i] * w[i];
    }
    std::vector<double> da(k), db(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double delta = p[i] - q[i];
      da[i] = 0.5 * (p[i] * (w[i] - pw) + delta);
      db[i] = 0.5 * (-q[i] * (w[i] - qw) - delta);
    }
    accumulate(grad, specific, da, weight / tau);
    accumulate(grad, agnostic, db, weight / tau);
  }
  return std::max(0.0, loss);
}

double l_ms(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau) {
  require_nonempty(batch);
  std::vector<double> per(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& it = batch[i];
    const std::size_t yv = require(it.y_v, "visible");
    const std::size_t yr = require(it.y_r, "infrared");
    per[i] = contrastive_loss(it.v, banks.specific_v, yv, tau) +
             contrastive_loss(it.v_hat, banks.specific_v, yv, tau) +
             contrastive_loss(it.r, banks.specific_r, yr, tau);
  }
  return pairwise_sum(per) / static_cast<double>(batch.size());
}

double l_ma(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau) {
  require_nonempty(batch);
  std::vector<double> per(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& it = batch[i];
    const std::size_t yv = require(it.y_v, "visible");
    const std::size_t yr = require(it.y_r, "infrared");
    double s = 0.0;
    for (auto f : {it.v, it.v_hat, it.r}) {
      s += contrastive_loss(f, banks.agnostic_v, yv, tau);
      s += contrastive_loss(f, banks.agnostic_r, yr, tau);
    }
    per[i] = s;
  }
  return pairwise_sum(per) / static_cast<double>(batch.size());
}

double l_cc(std::span<const BatchItem> batch, const MemoryBanks& banks, double tau) {
  require_nonempty(batch);
  std::vector<double> per(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& it = batch[i];
    double s = 0.0;
    for (auto f : {it.v, it.v_hat, it.r}) {
      s += consistency_loss(f, banks.specific_v, banks.agnostic_v, tau);
      s += consistency_loss(f, banks.specific_r, banks.agnostic_r, tau);
    }
    per[i] = s;
  }
  return pairwise_sum(per) / static_cast<double>(batch.size());
}

LossReport total_loss(std::span<const BatchItem> batch, const MemoryBanks& banks,
                      const HyperParams& hp, LossTerms terms, bool with_grads) {
  hp.validate();
  require_nonempty(batch);
  const std::size_t n = batch.size();
  const double scale = 1.0 / static_cast<double>(n);

  LossReport report;
  if (with_grads) {
    report.grads.resize(n);
    for (auto& g : report.grads) {
      g.v.assign(banks.specific_v.dim(), 0.0);
      g.v_hat.assign(banks.specific_v.dim(), 0.0);
      g.r.assign(banks.specific_v.dim(), 0.0);
    }
  }
  std::vector<double> ms(n), ma(n), cc(n);
  parallel_for(n, [&](std::size_t i) {
    const auto t = evaluate_item(batch[i], banks, hp, terms,
                                 with_grads ? &report.grads[i] : nullptr, scale);
    ms[i] = t.ms;
    ma[i] = t.ma;
    cc[i] = t.cc;
  });
  report.l_ms = pairwise_sum(ms) * scale;
  report.l_ma = terms.agnostic ? pairwise_sum(ma) * scale : 0.0;
  report.l_cc = terms.consistency ? pairwise_sum(cc) * scale : 0.0;
  report.total = report.l_ms + hp.alpha * report.l_ma + hp.beta * report.l_cc;
  return report;
}

}  // namespace xmm

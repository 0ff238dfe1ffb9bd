#include "xmm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "xmm/error.hpp"
#include "xmm/text_format.hpp"

namespace xmm {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// `count` members of a cluster; without replacement when the cluster is big
// enough, otherwise every member once and the rest drawn with replacement.
std::vector<std::size_t> draw_members(const std::vector<std::size_t>& members, std::size_t count,
                                      std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (members.size() >= count) {
    std::sample(members.begin(), members.end(), std::back_inserter(out), count, rng);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  }
  out = members;
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  while (out.size() < count) out.push_back(members[pick(rng)]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// `count` picks from [0, n): distinct while possible.
std::vector<std::size_t> draw_indices(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  return draw_members(all, count, rng);
}

std::vector<BatchSample> assemble(const std::vector<std::pair<std::size_t, std::size_t>>& clusters,
                                  const std::vector<std::vector<std::size_t>>& members_v,
                                  const std::vector<std::vector<std::size_t>>& members_r,
                                  const TrainConfig& cfg, std::mt19937_64& rng) {
  const auto per = static_cast<std::size_t>(cfg.instances_per_id);
  std::vector<BatchSample> batch;
  batch.reserve(clusters.size() * per);
  for (const auto& [a, b] : clusters) {
    const auto vs = draw_members(members_v[a], per, rng);
    const auto rs = draw_members(members_r[b], per, rng);
    for (std::size_t i = 0; i < per; ++i) batch.push_back({vs[i], rs[i], a, b});
  }
  return batch;
}

void update_feature(std::span<double> f, std::span<const double> grad, double lr) {
  // Move along the tangent component only; the radial part is removed by the
  // renormalization anyway.
  const double radial = dot(grad, f);
  for (std::size_t j = 0; j < f.size(); ++j) f[j] -= lr * (grad[j] - radial * f[j]);
  normalize_row(f);
}

}  // namespace

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::Baseline: return "baseline";
    case Ablation::BCCM_MSMA: return "bccm_msma";
    case Ablation::MBCCM_MSMA: return "mbccm_msma";
    case Ablation::Full: return "full";
  }
  return "unknown";
}

std::optional<Ablation> parse_ablation(std::string_view s) {
  for (auto a : {Ablation::Baseline, Ablation::BCCM_MSMA, Ablation::MBCCM_MSMA, Ablation::Full})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (pretrain_epochs < 0 || pretrain_epochs > epochs)
    throw InvalidConfig("pretrain_epochs must be in [0, epochs]");
  if (ids_per_batch < 1) throw InvalidConfig("ids_per_batch must be >= 1");
  if (instances_per_id < 1) throw InvalidConfig("instances_per_id must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidConfig("lr must be finite and >= 0");
  if (!(lr_decay_factor > 0.0)) throw InvalidConfig("lr_decay_factor must be positive");
  if (!(intermediate_sigma >= 0.0)) throw InvalidConfig("intermediate_sigma must be >= 0");
  hp.validate();
}

double TrainConfig::lr_at(int epoch) const {
  double rate = lr;
  for (int e : lr_decay_epochs)
    if (epoch >= e) rate /= lr_decay_factor;
  return rate;
}

TrainConfig desk_preset() {
  TrainConfig cfg;
  cfg.ids_per_batch = 4;
  cfg.instances_per_id = 4;
  return cfg;
}

std::vector<BatchSample> sample_batch(const PseudoLabels& labels_v, const PseudoLabels& labels_r,
                                      const MatchResult& match, const TrainConfig& cfg,
                                      std::mt19937_64& rng) {
  const auto pairs = match.pairs();
  if (pairs.empty()) throw EmptyMatch("matching matrix has no true entries");
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  for (std::size_t i : draw_indices(pairs.size(), static_cast<std::size_t>(cfg.ids_per_batch), rng))
    chosen.push_back(pairs[i]);
  return assemble(chosen, labels_v.members(), labels_r.members(), cfg, rng);
}

std::vector<BatchSample> sample_unpaired_batch(const PseudoLabels& labels_v,
                                               const PseudoLabels& labels_r,
                                               const TrainConfig& cfg, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(cfg.ids_per_batch);
  const auto a = draw_indices(static_cast<std::size_t>(labels_v.cluster_count), n, rng);
  const auto b = draw_indices(static_cast<std::size_t>(labels_r.cluster_count), n, rng);
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  for (std::size_t i = 0; i < n; ++i) chosen.emplace_back(a[i], b[i]);
  return assemble(chosen, labels_v.members(), labels_r.members(), cfg, rng);
}

std::vector<StepRecord> train_epoch(EpochState& state, TrainingSets& sets, const TrainConfig& cfg,
                                    std::mt19937_64& rng) {
  const bool matched = state.match.has_value();
  const bool consistency = matched && cfg.ablation == Ablation::Full;
  const LossTerms terms{matched, consistency};
  const RoutingPolicy routing{matched, cfg.intermediate_updates_agnostic_r};
  const double lr = cfg.lr_at(state.epoch);
  const std::size_t d = sets.visible.dim();

  // The intermediate stream follows its visible twin through a fixed offset.
  Matrix offset(sets.visible.size(), d);
  for (std::size_t i = 0; i < sets.visible.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      offset(i, j) = sets.intermediate.vectors(i, j) - sets.visible.vectors(i, j);

  auto clustered = [](const PseudoLabels& l) {
    return static_cast<std::size_t>(std::count_if(l.labels.begin(), l.labels.end(), [](int v) { return v >= 0; }));
  };
  const std::size_t n = std::max(clustered(state.labels_v), clustered(state.labels_r));
  const std::size_t batch_size = static_cast<std::size_t>(cfg.ids_per_batch * cfg.instances_per_id);
  const std::size_t steps = (n + batch_size - 1) / batch_size;

  std::vector<StepRecord> records;
  records.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const auto samples = matched ? sample_batch(state.labels_v, state.labels_r, *state.match, cfg, rng)
                                 : sample_unpaired_batch(state.labels_v, state.labels_r, cfg, rng);
    std::vector<BatchItem> batch;
    batch.reserve(samples.size());
    for (const auto& s : samples)
      batch.push_back({sets.visible.vectors.row(s.v_index), sets.intermediate.vectors.row(s.v_index),
                       sets.infrared.vectors.row(s.r_index), s.y_v, s.y_r});
    const LossReport report = total_loss(batch, state.banks, cfg.hp, terms, lr > 0.0);

    if (lr > 0.0) {
      std::map<std::size_t, std::vector<double>> grad_v, grad_r;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& gv = grad_v[samples[i].v_index];
        auto& gr = grad_r[samples[i].r_index];
        gv.resize(d, 0.0);
        gr.resize(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
          gv[j] += report.grads[i].v[j] + report.grads[i].v_hat[j];
          gr[j] += report.grads[i].r[j];
        }
      }
      for (const auto& [idx, g] : grad_v) {
        update_feature(sets.visible.vectors.row(idx), g, lr);
        auto twin = sets.intermediate.vectors.row(idx);
        for (std::size_t j = 0; j < d; ++j) twin[j] = sets.visible.vectors(idx, j) + offset(idx, j);
        normalize_row(twin);
      }
      for (const auto& [idx, g] : grad_r) update_feature(sets.infrared.vectors.row(idx), g, lr);
    }

    for (const auto& s : samples) {
      route_update(state.banks, {sets.visible.vectors.row(s.v_index), Modality::Visible, s.y_v, s.y_r}, routing);
      route_update(state.banks,
                   {sets.intermediate.vectors.row(s.v_index), Modality::IntermediateVisible, s.y_v, s.y_r},
                   routing);
      route_update(state.banks, {sets.infrared.vectors.row(s.r_index), Modality::Infrared, s.y_v, s.y_r},
                   routing);
    }

    records.push_back({state.epoch, static_cast<int>(step), report.l_ms, report.l_ma, report.l_cc,
                       report.total, state.labels_v.cluster_count, state.labels_r.cluster_count});
  }
  return records;
}

TrainResult run(const EmbeddingSet& visible, const EmbeddingSet& infrared, const TrainConfig& cfg) {
  cfg.validate();
  if (visible.dim() != infrared.dim())
    throw DimMismatch("visible dim " + std::to_string(visible.dim()) + " vs infrared dim " +
                      std::to_string(infrared.dim()));

  TrainingSets sets{visible, {}, infrared};
  sets.visible.modality = Modality::Visible;
  sets.infrared.modality = Modality::Infrared;
  const bool ground_truth = visible.has_ids() && infrared.has_ids();

  TrainResult result;
  std::mt19937_64 rng(mix_seed(cfg.seed, 0));
  std::optional<EpochState> state;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto cluster = [&](const EmbeddingSet& s, const char* which) {
      try {
        return dbscan(s, cfg.dbscan);
      } catch (const NoClusters& e) {
        throw NoClusters(std::string(which) + " modality at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    };
    PseudoLabels labels_v = cluster(sets.visible, "visible");
    PseudoLabels labels_r = cluster(sets.infrared, "infrared");
    const Centroids cv = centroids(sets.visible, labels_v);
    const Centroids cr = centroids(sets.infrared, labels_r);

    std::optional<MatchResult> match;
    if (cfg.matching_active(epoch)) {
      match = cfg.ablation == Ablation::BCCM_MSMA ? bccm(cv, cr, cfg.assign_policy)
                                                  : mbccm(cv, cr, cfg.assign_policy);
    }

    const bool carry = !cfg.rebuild_banks && state &&
                       state->banks.specific_v.size() == cv.size() &&
                       state->banks.specific_r.size() == cr.size();
    MemoryBanks banks = carry ? state->banks : init_banks(cv, cr, cfg.hp.mu);
    state = EpochState{std::move(labels_v), std::move(labels_r), std::move(match), std::move(banks), epoch};

    sets.intermediate = make_intermediate(sets.visible, cfg.intermediate_sigma, mix_seed(cfg.seed, 1000 + epoch));
    auto records = train_epoch(*state, sets, cfg, rng);

    EpochSummary summary;
    summary.epoch = epoch;
    summary.lr = cfg.lr_at(epoch);
    summary.k_v = state->labels_v.cluster_count;
    summary.k_r = state->labels_r.cluster_count;
    summary.matched = state->match.has_value();
    if (!records.empty()) {
      for (const auto& r : records) {
        summary.l_ms += r.l_ms;
        summary.l_ma += r.l_ma;
        summary.l_cc += r.l_cc;
        summary.total += r.total;
      }
      const double n = static_cast<double>(records.size());
      summary.l_ms /= n;
      summary.l_ma /= n;
      summary.l_cc /= n;
      summary.total /= n;
    }
    if (ground_truth) {
      if (state->match)
        summary.match_quality = match_quality(*state->match, state->labels_v, state->labels_r,
                                              sets.visible.ids, sets.infrared.ids);
      summary.mean_positive_distance = mean_positive_distance(sets.visible, sets.infrared);
      summary.map = retrieve_and_score(sets.infrared, sets.visible).map;
    }
    result.epochs.push_back(summary);
    result.steps.insert(result.steps.end(), records.begin(), records.end());

    if (epoch + 1 == cfg.pretrain_epochs) result.after_pretrain = {{sets.visible, sets.infrared}};
  }

  result.visible = std::move(sets.visible);
  result.infrared = std::move(sets.infrared);
  result.final_state = std::move(state);
  return result;
}

std::string format_metrics_log(const std::vector<StepRecord>& steps) {
  std::string out;
  for (const auto& s : steps) {
    out += std::to_string(s.epoch) + ' ' + std::to_string(s.step) + ' ' + format_double(s.l_ms) + ' ' +
           format_double(s.l_ma) + ' ' + format_double(s.l_cc) + ' ' + format_double(s.total) + ' ' +
           std::to_string(s.k_v) + ' ' + std::to_string(s.k_r) + '\n';
  }
  return out;
}

std::string format_epoch_summaries(const std::vector<EpochSummary>& epochs) {
  std::string out;
  for (const auto& e : epochs) {
    out += "epoch=" + std::to_string(e.epoch) + " lr=" + format_double(e.lr) + " l_ms=" + format_double(e.l_ms) +
           " l_ma=" + format_double(e.l_ma) + " l_cc=" + format_double(e.l_cc) +
           " total=" + format_double(e.total) + " k_v=" + std::to_string(e.k_v) +
           " k_r=" + std::to_string(e.k_r) + " matched=" + (e.matched ? "1" : "0");
    if (e.match_quality)
      out += " pair_precision=" + format_double(e.match_quality->pair_precision) +
             " pair_recall=" + format_double(e.match_quality->pair_recall);
    if (e.mean_positive_distance) out += " mean_pos_dist=" + format_double(*e.mean_positive_distance);
    if (e.map) out += " map=" + format_double(*e.map);
    out += '\n';
  }
  return out;
}

}  // namespace xmm

#include "xmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "xmm/error.hpp"
#include "xmm/parallel.hpp"
#include "xmm/text_format.hpp"

namespace xmm {

namespace {

void require_ids(const EmbeddingSet& s, const char* which) {
  if (!s.has_ids()) throw MissingIds(std::string(which) + " set carries no identities");
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace

std::string RetrievalReport::to_text() const {
  std::string out;
  auto put = [&](const char* key, const std::string& v) { out += std::string(key) + "=" + v + "\n"; };
  put("map", format_double(map));
  put("rank1", format_double(rank1));
  put("rank10", format_double(rank10));
  put("rank20", format_double(rank20));
  put("minp", format_double(minp));
  put("n_queries", std::to_string(n_queries));
  put("n_excluded", std::to_string(n_excluded));
  return out;
}

std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery) {
  std::vector<double> sim(gallery.rows());
  for (std::size_t g = 0; g < gallery.rows(); ++g) sim[g] = dot(query, gallery.row(g));
  std::vector<std::size_t> order(gallery.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  return order;
}

QueryScore score_ranking(const std::vector<bool>& positive_at_rank) {
  QueryScore s;
  std::size_t hits = 0;
  std::size_t last = 0;
  double precision_sum = 0.0;
  for (std::size_t r = 0; r < positive_at_rank.size(); ++r) {
    if (!positive_at_rank[r]) continue;
    ++hits;
    if (hits == 1) s.first_hit = r + 1;
    last = r + 1;
    precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) return s;
  s.ap = precision_sum / static_cast<double>(hits);
  s.inp = static_cast<double>(hits) / static_cast<double>(last);
  return s;
}

RetrievalReport retrieve_and_score(const EmbeddingSet& query, const EmbeddingSet& gallery) {
  require_ids(query, "query");
  require_ids(gallery, "gallery");
  if (query.dim() != gallery.dim()) throw DimMismatch("query and gallery dims differ");

  const std::size_t nq = query.size();
  std::vector<QueryScore> scores(nq);
  std::vector<char> valid(nq, 0);
  parallel_for(nq, [&](std::size_t q) {
    const auto order = rank_gallery(query.vectors.row(q), gallery.vectors);
    std::vector<bool> hit(order.size());
    bool any = false;
    for (std::size_t r = 0; r < order.size(); ++r) {
      hit[r] = gallery.ids[order[r]] == query.ids[q];
      any = any || hit[r];
    }
    if (!any) return;
    valid[q] = 1;
    scores[q] = score_ranking(hit);
  });

  RetrievalReport rep;
  std::vector<double> ap, inp;
  std::size_t within1 = 0, within10 = 0, within20 = 0;
  for (std::size_t q = 0; q < nq; ++q) {
    if (!valid[q]) {
      ++rep.n_excluded;
      continue;
    }
    ap.push_back(scores[q].ap);
    inp.push_back(scores[q].inp);
    within1 += scores[q].first_hit <= 1;
    within10 += scores[q].first_hit <= 10;
    within20 += scores[q].first_hit <= 20;
  }
  rep.n_queries = ap.size();
  if (rep.n_queries == 0) return rep;
  const double n = static_cast<double>(rep.n_queries);
  rep.map = std::accumulate(ap.begin(), ap.end(), 0.0) / n;
  rep.minp = std::accumulate(inp.begin(), inp.end(), 0.0) / n;
  rep.rank1 = static_cast<double>(within1) / n;
  rep.rank10 = static_cast<double>(within10) / n;
  rep.rank20 = static_cast<double>(within20) / n;
  return rep;
}

std::vector<long long> majority_identity(const PseudoLabels& labels, const std::vector<long long>& ids) {
  if (ids.size() != labels.size()) throw MissingIds("identity count does not match label count");
  std::vector<std::map<long long, std::size_t>> votes(static_cast<std::size_t>(labels.cluster_count));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels.labels[i] >= 0) ++votes[static_cast<std::size_t>(labels.labels[i])][ids[i]];
  std::vector<long long> out(votes.size(), -1);
  for (std::size_t k = 0; k < votes.size(); ++k) {
    std::size_t best = 0;
    for (const auto& [id, n] : votes[k])  // ascending id, so strict > keeps the lowest on ties
      if (n > best) {
        best = n;
        out[k] = id;
      }
  }
  return out;
}

MatchQuality match_quality(const MatchResult& match, const PseudoLabels& labels_v,
                           const PseudoLabels& labels_r, const std::vector<long long>& ids_v,
                           const std::vector<long long>& ids_r) {
  if (ids_v.empty() || ids_r.empty()) throw MissingIds("match quality needs ground-truth ids");
  const auto major_v = majority_identity(labels_v, ids_v);
  const auto major_r = majority_identity(labels_r, ids_r);
  if (major_v.size() != match.q.rows() || major_r.size() != match.q.cols())
    throw DimMismatch("labels do not match the matching matrix shape");

  MatchQuality mq;
  std::map<long long, bool> found;  // identity -> has a correct pair
  for (long long id : major_v)
    if (std::find(major_r.begin(), major_r.end(), id) != major_r.end()) found[id] = false;

  std::size_t covered = 0;
  for (std::size_t a = 0; a < match.q.rows(); ++a) {
    bool any = false;
    for (std::size_t b = 0; b < match.q.cols(); ++b) {
      if (!match.q(a, b)) continue;
      any = true;
      ++mq.pairs;
      if (major_v[a] == major_r[b]) {
        ++mq.correct_pairs;
        found[major_v[a]] = true;
      }
    }
    covered += any;
  }
  for (std::size_t b = 0; b < match.q.cols(); ++b) {
    bool any = false;
    for (std::size_t a = 0; a < match.q.rows() && !any; ++a) any = match.q(a, b);
    covered += any;
  }

  mq.pair_precision = mq.pairs ? static_cast<double>(mq.correct_pairs) / static_cast<double>(mq.pairs) : 0.0;
  std::size_t recalled = 0;
  for (const auto& [id, ok] : found) recalled += ok;
  mq.pair_recall = found.empty() ? 0.0 : static_cast<double>(recalled) / static_cast<double>(found.size());
  mq.coverage = static_cast<double>(covered) / static_cast<double>(match.q.rows() + match.q.cols());
  return mq;
}

std::size_t Histogram::mode() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::string Histogram::to_text() const {
  std::string out;
  for (std::size_t b = 0; b < counts.size(); ++b)
    out += format_double(edges[b]) + " " + std::to_string(counts[b]) + "\n";
  return out;
}

Histogram positive_distance_histogram(const EmbeddingSet& visible, const EmbeddingSet& infrared,
                                      std::size_t n_pairs, std::size_t bins, std::uint64_t seed) {
  require_ids(visible, "visible");
  require_ids(infrared, "infrared");
  if (bins == 0) throw InvalidConfig("bins must be >= 1");

  std::map<long long, std::vector<std::size_t>> by_id_v, by_id_r;
  for (std::size_t i = 0; i < visible.size(); ++i) by_id_v[visible.ids[i]].push_back(i);
  for (std::size_t i = 0; i < infrared.size(); ++i) by_id_r[infrared.ids[i]].push_back(i);

  // Cumulative pair counts so that every positive pair is equally likely.
  std::vector<const std::vector<std::size_t>*> vs, rs;
  std::vector<std::uint64_t> cumulative;
  std::uint64_t total = 0;
  for (const auto& [id, members] : by_id_v) {
    auto it = by_id_r.find(id);
    if (it == by_id_r.end()) continue;
    total += static_cast<std::uint64_t>(members.size()) * it->second.size();
    vs.push_back(&members);
    rs.push_back(&it->second);
    cumulative.push_back(total);
  }
  if (total == 0) throw NoPositivePairs("no identity appears in both sets");

  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = 2.0 * static_cast<double>(b) / static_cast<double>(bins);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  for (std::size_t s = 0; s < n_pairs; ++s) {
    const std::uint64_t u = pick(rng);
    const std::size_t g = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const std::uint64_t offset = u - (g == 0 ? 0 : cumulative[g - 1]);
    const std::size_t i = (*vs[g])[offset / rs[g]->size()];
    const std::size_t j = (*rs[g])[offset % rs[g]->size()];
    const double d = distance(visible.vectors.row(i), infrared.vectors.row(j));
    const auto bin = static_cast<std::size_t>(d / 2.0 * static_cast<double>(bins));
    ++h.counts[std::min(bin, bins - 1)];
  }
  return h;
}

double mean_positive_distance(const EmbeddingSet& visible, const EmbeddingSet& infrared) {
  require_ids(visible, "visible");
  require_ids(infrared, "infrared");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < visible.size(); ++i)
    for (std::size_t j = 0; j < infrared.size(); ++j)
      if (visible.ids[i] == infrared.ids[j]) {
        sum += distance(visible.vectors.row(i), infrared.vectors.row(j));
        ++n;
      }
  if (n == 0) throw NoPositivePairs("no identity appears in both sets");
  return sum / static_cast<double>(n);
}

}  // namespace xmm

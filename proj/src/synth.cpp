#include "xmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "xmm/error.hpp"

namespace xmm {

namespace {

void gaussian_fill(std::span<double> out, double scale, std::mt19937_64& rng) {
  if (scale == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::normal_distribution<double> g(0.0, scale / std::sqrt(static_cast<double>(out.size())));
  for (double& v : out) v = g(rng);
}

void random_unit(std::span<double> out, std::mt19937_64& rng) {
  do {
    gaussian_fill(out, 1.0, rng);
  } while (dot(out, out) < 1e-12);
  normalize_row(out);
}

void set_norm(std::span<double> v, double norm) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x *= norm / n;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidConfig(what); };
  if (n_ids < 2) fail("n_ids must be >= 2");
  if (per_id_per_modality < 2) fail("per_id_per_modality must be >= 2");
  if (dim < 2) fail("dim must be >= 2");
  if (!(intra_sigma >= 0.0) || !std::isfinite(intra_sigma)) fail("intra_sigma must be finite and >= 0");
  if (!(modality_shift >= 0.0) || !std::isfinite(modality_shift))
    fail("modality_shift must be finite and >= 0");
  if (!(split_prob >= 0.0 && split_prob <= 1.0)) fail("split_prob must be in [0,1]");
  if (!(infrared_split_prob >= 0.0 && infrared_split_prob <= 1.0))
    fail("infrared_split_prob must be in [0,1]");
  if (!(split_offset >= 0.0) || !std::isfinite(split_offset)) fail("split_offset must be finite and >= 0");
  if (anchor_spread && (!(*anchor_spread > 0.0) || !std::isfinite(*anchor_spread)))
    fail("anchor_spread must be finite and > 0");
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto ids = static_cast<std::size_t>(cfg.n_ids);
  const auto per = static_cast<std::size_t>(cfg.per_id_per_modality);
  const auto d = static_cast<std::size_t>(cfg.dim);

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution split_draw(cfg.split_prob);
  std::bernoulli_distribution infrared_split_draw(cfg.infrared_split_prob);

  SynthData data;
  data.anchors = Matrix(ids, d);
  data.shifts = Matrix(ids, d);
  data.split.assign(ids, false);
  data.infrared_split.assign(ids, false);

  std::vector<double> centre(d);
  if (cfg.anchor_spread) random_unit(centre, rng);

  Matrix split_anchor(ids, d);
  Matrix infrared_split_offset(ids, d);
  for (std::size_t k = 0; k < ids; ++k) {
    auto anchor = data.anchors.row(k);
    if (cfg.anchor_spread) {
      do {
        gaussian_fill(anchor, *cfg.anchor_spread, rng);
        for (std::size_t j = 0; j < d; ++j) anchor[j] += centre[j];
      } while (dot(anchor, anchor) < 1e-12);
      normalize_row(anchor);
    } else {
      random_unit(anchor, rng);
    }

    auto shift = data.shifts.row(k);
    random_unit(shift, rng);
    set_norm(shift, cfg.modality_shift);

    data.split[k] = split_draw(rng);
    auto alt = split_anchor.row(k);
    random_unit(alt, rng);
    set_norm(alt, cfg.split_offset);
    for (std::size_t j = 0; j < d; ++j) alt[j] += anchor[j];
    normalize_row(alt);

    // Drawn only when enabled so that datasets without infrared splits keep
    // their random stream.
    if (cfg.infrared_split_prob > 0.0) {
      data.infrared_split[k] = infrared_split_draw(rng);
      auto off = infrared_split_offset.row(k);
      random_unit(off, rng);
      set_norm(off, cfg.split_offset);
    }
  }

  auto make_set = [&](Modality m) {
    EmbeddingSet s;
    s.modality = m;
    s.vectors = Matrix(ids * per, d);
    s.ids.resize(ids * per);
    return s;
  };
  data.visible = make_set(Modality::Visible);
  data.infrared = make_set(Modality::Infrared);

  std::vector<double> noise(d);
  const double intra_scale = cfg.intra_sigma;
  for (std::size_t k = 0; k < ids; ++k) {
    for (std::size_t s = 0; s < per; ++s) {
      const std::size_t r = k * per + s;
      const bool second_half = data.split[k] && s >= per / 2;
      auto centre_v = second_half ? split_anchor.row(k) : data.anchors.row(k);

      auto v = data.visible.vectors.row(r);
      gaussian_fill(noise, intra_scale, rng);
      for (std::size_t j = 0; j < d; ++j) v[j] = centre_v[j] + noise[j];
      normalize_row(v);
      data.visible.ids[r] = static_cast<long long>(k);

      auto ir = data.infrared.vectors.row(r);
      const bool ir_second_half = data.infrared_split[k] && s >= per / 2;
      gaussian_fill(noise, intra_scale, rng);
      for (std::size_t j = 0; j < d; ++j)
        ir[j] = data.anchors(k, j) + data.shifts(k, j) + noise[j] +
                (ir_second_half ? infrared_split_offset(k, j) : 0.0);
      normalize_row(ir);
      data.infrared.ids[r] = static_cast<long long>(k);
    }
  }
  return data;
}

}  // namespace xmm

#include <doctest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "xmm/error.hpp"
#include "xmm/objective.hpp"

using namespace xmm;

namespace {

MemoryBank bank_of(oracle::Grid rows, BankKind kind = BankKind::SpecificVisible) {
  return MemoryBank(testing::from_grid(rows), kind, 0.1);
}

// Two-cluster banks for each modality: prototypes along e1/e2 (visible) and
// e3/e4 (infrared).
MemoryBanks orthogonal_banks() {
  Centroids cv, cr;
  cv.matrix = testing::from_grid({{1, 0, 0, 0}, {0, 1, 0, 0}});
  cr.matrix = testing::from_grid({{0, 0, 1, 0}, {0, 0, 0, 1}});
  cv.counts = cr.counts = {1, 1};
  return init_banks(cv, cr, 0.1);
}

}  // namespace

TEST_CASE("contrastive_loss: worked examples") {
  const std::vector<double> f{1, 0};
  SUBCASE("identical prototypes give log K") {
    for (std::size_t k : {1, 2, 5}) {
      const MemoryBank b = bank_of(oracle::Grid(k, {0.6, 0.8}));
      CHECK(std::abs(contrastive_loss(f, b, 0, 0.05) - std::log(static_cast<double>(k))) < 1e-9);
    }
  }
  SUBCASE("positive aligned, negative orthogonal") {
    const MemoryBank b = bank_of({{1, 0}, {0, 1}});
    const double expected = std::log1p(std::exp(-20.0));
    CHECK(contrastive_loss(f, b, 0, 0.05) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(2.06e-9).epsilon(1e-3));
  }
  SUBCASE("bounds") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
      const std::size_t k = 1 + rng() % 6;
      const MemoryBank b(testing::unit_rows(rng, k, 4), BankKind::SpecificVisible, 0.1);
      const auto x = testing::unit_vector(rng, 4);
      const double l = contrastive_loss(x, b, rng() % k, 0.05);
      CHECK(l >= 0.0);
      CHECK(l <= 2.0 / 0.05 + std::log(static_cast<double>(k)));
    }
  }
  SUBCASE("errors") {
    const MemoryBank b = bank_of({{1, 0}, {0, 1}});
    CHECK_THROWS_AS(contrastive_loss(f, b, 2, 0.05), SlotOutOfRange);
    const std::vector<double> g{1, 0, 0};
    CHECK_THROWS_AS(contrastive_loss(g, b, 0, 0.05), DimMismatch);
  }
}

TEST_CASE("predict") {
  const std::vector<double> f{1, 0};
  const auto p = predict(f, bank_of({{1, 0}, {0, 1}}), 1.0);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.2689).epsilon(1e-4));

  const auto u = predict(f, bank_of(oracle::Grid(4, {0.0, 1.0})), 0.05);
  for (double x : u) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));

  const auto sharp = predict(f, bank_of({{0.6, 0.8}, {1, 0}, {0, 1}}), 0.001);
  CHECK(std::abs(sharp[1] - 1.0) < 1e-6);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const MemoryBank b(testing::unit_rows(rng, 1 + rng() % 7, 3), BankKind::SpecificVisible, 0.1);
    const auto q = predict(testing::unit_vector(rng, 3), b, 0.05);
    double s = 0.0;
    for (double x : q) {
      CHECK(x > 0.0);
      s += x;
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("consistency_loss") {
  SUBCASE("worked example: p=(0.7311,0.2689), q=(0.5,0.5)") {
    // tau=1, f=(1,0): specific bank sims (1,0) give p; agnostic bank with
    // equal sims gives q.
    const std::vector<double> f{1, 0};
    const MemoryBank spec = bank_of({{1, 0}, {0, 1}});
    const MemoryBank agn = bank_of({{0, 1}, {0, 1}});
    const double p0 = std::exp(1.0) / (std::exp(1.0) + 1.0), p1 = 1.0 - p0;
    const double direct = 0.5 * (p0 * std::log(p0 / 0.5) + p1 * std::log(p1 / 0.5) +
                                 0.5 * std::log(0.5 / p0) + 0.5 * std::log(0.5 / p1));
    const double got = consistency_loss(f, spec, agn, 1.0);
    CHECK(got == doctest::Approx(direct).epsilon(1e-12));
    CHECK(got == doctest::Approx(0.115529).epsilon(1e-5));
    CHECK(consistency_loss(f, agn, spec, 1.0) == doctest::Approx(got).epsilon(1e-14));
  }
  SUBCASE("identical banks give zero; otherwise positive") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
      const MemoryBank a(testing::unit_rows(rng, 4, 5), BankKind::SpecificVisible, 0.1);
      const MemoryBank b(testing::unit_rows(rng, 4, 5), BankKind::AgnosticVisibleBased, 0.1);
      const auto f = testing::unit_vector(rng, 5);
      CHECK(std::abs(consistency_loss(f, a, a, 0.05)) <= 1e-12);
      CHECK(consistency_loss(f, a, b, 0.05) > 0.0);
    }
  }
  SUBCASE("size mismatch") {
    const std::vector<double> f{1, 0};
    CHECK_THROWS_AS(consistency_loss(f, bank_of({{1, 0}}), bank_of({{1, 0}, {0, 1}}), 0.05), ScaleMismatch);
  }
}

TEST_CASE("batch losses") {
  MemoryBanks banks = orthogonal_banks();
  const std::vector<double> v{1, 0, 0, 0}, r{0, 0, 1, 0};
  const std::vector<BatchItem> batch{{v, v, r, 0, 0}};
  const double one = std::log1p(std::exp(-20.0));
  CHECK(l_ms(batch, banks, 0.05) == doctest::Approx(3 * one).epsilon(1e-9));

  SUBCASE("degenerate banks give 3 log K") {
    Centroids c;
    c.matrix = testing::from_grid({{0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}});
    c.counts = {1, 1, 1};
    const auto flat = init_banks(c, c, 0.1);
    CHECK(std::abs(l_ms(batch, flat, 0.05) - 3 * std::log(3.0)) < 1e-9);
    CHECK(std::abs(l_ma(batch, flat, 0.05) - 6 * std::log(3.0)) < 1e-9);
    CHECK(std::abs(l_cc(batch, flat, 0.05)) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(l_ms({}, banks, 0.05), EmptyBatch);
    CHECK_THROWS_AS(l_cc({}, banks, 0.05), EmptyBatch);
    const std::vector<BatchItem> unlabeled{{v, v, r, 0, std::nullopt}};
    CHECK_THROWS_AS(l_ma(unlabeled, banks, 0.05), MissingLabel);
    CHECK_THROWS_AS(total_loss(unlabeled, banks, {}), MissingLabel);
    HyperParams bad;
    bad.tau = 0.0;
    CHECK_THROWS_AS(total_loss(batch, banks, bad), InvalidConfig);
  }
}

TEST_CASE("total_loss: weighting identities") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const auto inst = testing::random_instance(rng, 5, 8, 4);
    const auto batch = inst.batch();
    HyperParams hp;  // 0.05, 0.9, 0.5
    const auto rep = total_loss(batch, inst.banks, hp);
    const double ms = l_ms(batch, inst.banks, hp.tau);
    const double ma = l_ma(batch, inst.banks, hp.tau);
    const double cc = l_cc(batch, inst.banks, hp.tau);
    CHECK(std::abs(rep.l_ms - ms) < 1e-9);
    CHECK(std::abs(rep.l_ma - ma) < 1e-9);
    CHECK(std::abs(rep.l_cc - cc) < 1e-9);
    CHECK(std::abs(rep.total - (ms + 0.9 * ma + 0.5 * cc)) < 1e-9);

    HyperParams zero = hp;
    zero.alpha = zero.beta = 0.0;
    const auto z = total_loss(batch, inst.banks, zero);
    CHECK(z.total == z.l_ms);

    const auto off = total_loss(batch, inst.banks, hp, {false, false});
    CHECK(off.l_ma == 0.0);
    CHECK(off.l_cc == 0.0);
    CHECK(off.total == off.l_ms);
  }
}

TEST_CASE("total_loss: gradients match central differences") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 40; ++t) {
    const auto inst = testing::random_instance(rng, 5, 8, 3);
    CHECK(testing::max_relative_gradient_error(inst, {}) < 1e-4);
  }
  // Instances at the worked-example scale (K <= 3, d <= 5).
  std::mt19937_64 fixed(3);
  auto inst = testing::random_instance(fixed, 3, 5, 1);
  CHECK(testing::max_relative_gradient_error(inst, {}) < 1e-4);
}

TEST_CASE("pairwise_sum") {
  std::vector<double> xs(1000);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 0.1 * static_cast<double>(i % 7);
  double plain = 0.0;
  for (double x : xs) plain += x;
  CHECK(pairwise_sum(xs) == doctest::Approx(plain).epsilon(1e-12));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

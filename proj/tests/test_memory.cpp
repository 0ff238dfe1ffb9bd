#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "xmm/clustering.hpp"
#include "xmm/error.hpp"
#include "xmm/memory.hpp"

using namespace xmm;

namespace {

Centroids make_centroids(Matrix m) {
  Centroids c;
  c.counts.assign(m.rows(), 1);
  c.matrix = std::move(m);
  return c;
}

MemoryBanks random_banks(std::mt19937_64& rng, std::size_t kv, std::size_t kr, std::size_t d,
                         double mu) {
  return init_banks(make_centroids(testing::unit_rows(rng, kv, d)),
                    make_centroids(testing::unit_rows(rng, kr, d)), mu);
}

}  // namespace

TEST_CASE("momentum_update: worked examples") {
  Matrix proto(1, 2);
  proto(0, 0) = 1.0;
  const std::vector<double> f{0.0, 1.0};

  MemoryBank keep(proto, BankKind::SpecificVisible, 1.0);
  keep.momentum_update(0, f);
  CHECK(keep.prototypes() == proto);

  MemoryBank replace(proto, BankKind::SpecificVisible, 0.0);
  replace.momentum_update(0, f);
  CHECK(replace.prototypes()(0, 0) == 0.0);
  CHECK(replace.prototypes()(0, 1) == 1.0);

  MemoryBank mix(proto, BankKind::SpecificVisible, 0.1);
  mix.momentum_update(0, f);
  // normalize(0.1, 0.9): 0.1 / sqrt(0.82) and 0.9 / sqrt(0.82).
  CHECK(mix.prototypes()(0, 0) == doctest::Approx(0.1104).epsilon(5e-4));
  CHECK(mix.prototypes()(0, 1) == doctest::Approx(0.9939).epsilon(5e-5));
  CHECK(mix.prototypes()(0, 0) == doctest::Approx(0.1 / std::sqrt(0.82)).epsilon(1e-14));

  CHECK_THROWS_AS(mix.momentum_update(1, f), SlotOutOfRange);
  const std::vector<double> wrong{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(mix.momentum_update(0, wrong), DimMismatch);
}

TEST_CASE("init_banks: shapes and independent copies") {
  std::mt19937_64 rng(1);
  auto banks = random_banks(rng, 3, 5, 4, 0.1);
  CHECK(banks.specific_v.size() == 3);
  CHECK(banks.agnostic_v.size() == 3);
  CHECK(banks.specific_r.size() == 5);
  CHECK(banks.agnostic_r.size() == 5);
  CHECK(banks.specific_v.prototypes() == banks.agnostic_v.prototypes());
  CHECK(banks.specific_r.prototypes() == banks.agnostic_r.prototypes());
  CHECK(banks.agnostic_v.kind() == BankKind::AgnosticVisibleBased);

  const auto f = testing::unit_vector(rng, 4);
  const Matrix before_spec_v = banks.specific_v.prototypes();
  const Matrix before_agn_v = banks.agnostic_v.prototypes();
  route_update(banks, {f, Modality::Infrared, 2, 4});
  CHECK(banks.specific_v.prototypes() == before_spec_v);
  CHECK_FALSE(banks.agnostic_v.prototypes() == before_agn_v);
}

TEST_CASE("route_update: routing table") {
  std::mt19937_64 rng(2);
  const auto f = testing::unit_vector(rng, 6);
  auto changed_rows = [](const Matrix& a, const Matrix& b) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c)
        if (a(r, c) != b(r, c)) {
          rows.push_back(r);
          break;
        }
    return rows;
  };
  using Rows = std::vector<std::size_t>;

  SUBCASE("visible instance") {
    auto banks = random_banks(rng, 4, 6, 6, 0.1);
    const auto old = banks;
    route_update(banks, {f, Modality::Visible, 2, 5});
    CHECK(changed_rows(old.specific_v.prototypes(), banks.specific_v.prototypes()) == Rows{2});
    CHECK(changed_rows(old.agnostic_v.prototypes(), banks.agnostic_v.prototypes()) == Rows{2});
    CHECK(changed_rows(old.agnostic_r.prototypes(), banks.agnostic_r.prototypes()) == Rows{5});
    CHECK(banks.specific_r.prototypes() == old.specific_r.prototypes());
  }
  SUBCASE("infrared instance") {
    auto banks = random_banks(rng, 4, 6, 6, 0.1);
    const auto old = banks;
    route_update(banks, {f, Modality::Infrared, 2, 5});
    CHECK(changed_rows(old.specific_r.prototypes(), banks.specific_r.prototypes()) == Rows{5});
    CHECK(changed_rows(old.agnostic_v.prototypes(), banks.agnostic_v.prototypes()) == Rows{2});
    CHECK(changed_rows(old.agnostic_r.prototypes(), banks.agnostic_r.prototypes()) == Rows{5});
    CHECK(banks.specific_v.prototypes() == old.specific_v.prototypes());
  }
  SUBCASE("intermediate instance, with and without the agnostic-r flag") {
    auto banks = random_banks(rng, 4, 6, 6, 0.1);
    const auto old = banks;
    route_update(banks, {f, Modality::IntermediateVisible, 1, 3});
    CHECK(changed_rows(old.specific_v.prototypes(), banks.specific_v.prototypes()) == Rows{1});
    CHECK(changed_rows(old.agnostic_r.prototypes(), banks.agnostic_r.prototypes()) == Rows{3});

    auto banks2 = old;
    route_update(banks2, {f, Modality::IntermediateVisible, 1, 3}, {true, false});
    CHECK(banks2.agnostic_r.prototypes() == old.agnostic_r.prototypes());
    CHECK(changed_rows(old.agnostic_v.prototypes(), banks2.agnostic_v.prototypes()) == Rows{1});
  }
  SUBCASE("agnostic updates off: own specific bank only") {
    auto banks = random_banks(rng, 4, 6, 6, 0.1);
    const auto old = banks;
    route_update(banks, {f, Modality::Infrared, std::nullopt, 5}, {false, true});
    CHECK(changed_rows(old.specific_r.prototypes(), banks.specific_r.prototypes()) == Rows{5});
    CHECK(banks.agnostic_v.prototypes() == old.agnostic_v.prototypes());
    CHECK(banks.agnostic_r.prototypes() == old.agnostic_r.prototypes());
  }
  SUBCASE("missing cross label leaves banks untouched") {
    auto banks = random_banks(rng, 4, 6, 6, 0.1);
    const auto old = banks;
    CHECK_THROWS_AS(route_update(banks, {f, Modality::Visible, 2, std::nullopt}), MissingLabel);
    CHECK(banks.specific_v.prototypes() == old.specific_v.prototypes());
    CHECK_THROWS_AS(route_update(banks, {f, Modality::Visible, 2, 6}), SlotOutOfRange);
    CHECK(banks.specific_v.prototypes() == old.specific_v.prototypes());
  }
}

TEST_CASE("memory properties under random traffic") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto banks = random_banks(rng, 5, 4, 7, 0.1 * (trial % 10));
    const Matrix spec_r = banks.specific_r.prototypes();
    for (int step = 0; step < 50; ++step) {
      const auto f = testing::unit_vector(rng, 7);
      route_update(banks, {f, step % 2 ? Modality::Visible : Modality::IntermediateVisible,
                           rng() % 5, rng() % 4});
    }
    // Visible-only traffic never touches the infrared-specific bank.
    CHECK(banks.specific_r.prototypes() == spec_r);
    for (const MemoryBank* b : {&banks.specific_v, &banks.specific_r, &banks.agnostic_v, &banks.agnostic_r})
      for (std::size_t k = 0; k < b->size(); ++k)
        CHECK(std::abs(dot(b->prototypes().row(k), b->prototypes().row(k)) - 1.0) < 1e-6);
  }
}

TEST_CASE("updates to distinct slots commute exactly") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    MemoryBank a(testing::unit_rows(rng, 4, 5), BankKind::SpecificInfrared, 0.3);
    MemoryBank b = a;
    const auto f = testing::unit_vector(rng, 5), g = testing::unit_vector(rng, 5);
    const std::size_t s = rng() % 4, t = (s + 1 + rng() % 3) % 4;
    a.momentum_update(s, f);
    a.momentum_update(t, g);
    b.momentum_update(t, g);
    b.momentum_update(s, f);
    CHECK(a.prototypes() == b.prototypes());
  }
}

TEST_CASE("to_embedding_set exposes slots as ids") {
  std::mt19937_64 rng(4);
  MemoryBank bank(testing::unit_rows(rng, 3, 4), BankKind::AgnosticInfraredBased, 0.1);
  const auto set = to_embedding_set(bank);
  CHECK(set.vectors == bank.prototypes());
  CHECK(set.ids == std::vector<long long>{0, 1, 2});
  CHECK(set.modality == Modality::Infrared);
}

#include <doctest.h>

#include <algorithm>

#include "kga/discriminator.hpp"
#include "kga/error.hpp"
#include "support.hpp"

using namespace kga;

namespace {

double oracle_score(const DiscriminatorParams& p, const EmbeddingTable& t, const Triplet& x) {
  const auto one = [](const RowVector& v) {
    Matrix m(1, v.size());
    m.row(0) = v;
    return m;
  };
  RowVector cat(3 * t.entities.cols());
  cat << t.entities.row(x.head), t.relations.row(x.relation), t.entities.row(x.tail);
  const double z = mlp_apply(p.f_net, one(t.entities.row(x.head)))(0, 0) +
                   mlp_apply(p.f_net, one(t.entities.row(x.tail)))(0, 0) + mlp_apply(p.g_net, one(cat))(0, 0);
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<Triplet> random_triplets(std::size_t n, Index ne, Index nr, Rng& rng) {
  std::vector<Triplet> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<Index>(uniform_index(rng, ne)), static_cast<Index>(uniform_index(rng, nr)),
                   static_cast<Index>(uniform_index(rng, ne))});
  }
  return out;
}

}  // namespace

TEST_SUITE("discriminator") {
  TEST_CASE("all-zero networks score exactly 0.5 and lose 2 log 2") {
    Rng rng(1);
    const auto t = test::random_table(5, 2, 3, rng);
    const auto p = DiscriminatorParams::zeros(3, 4);
    CHECK(disc_score(p, t, {0, 1, 2}) == 0.5);
    const auto batch = random_triplets(6, 5, 2, rng);
    CHECK(disc_loss(p, t, batch, batch) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("scores match a composition of independent forward passes") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const auto t = test::random_table(6, 3, 4, rng);
      const auto p = DiscriminatorParams::init(4, 7, rng);
      const auto batch = random_triplets(8, 6, 3, rng);
      const Vector s = disc_scores(p, t, batch);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(std::abs(s(static_cast<Eigen::Index>(i)) - oracle_score(p, t, batch[i])) <= 1e-12);
        CHECK(std::abs(disc_score(p, t, batch[i]) - oracle_score(p, t, batch[i])) <= 1e-12);
      }
      // h = t: f is applied twice to the same vector.
      CHECK(std::abs(disc_score(p, t, {2, 1, 2}) - oracle_score(p, t, {2, 1, 2})) <= 1e-12);
    }
  }

  TEST_CASE("loss matches a scalar recomputation from individual scores") {
    Rng rng(3);
    const auto t = test::random_table(6, 3, 4, rng);
    const auto p = DiscriminatorParams::init(4, 5, rng);
    const auto real = random_triplets(7, 6, 3, rng);
    const auto fake = random_triplets(4, 6, 3, rng);
    double a = 0.0, b = 0.0;
    for (const auto& x : real) a += std::log(disc_score(p, t, x));
    for (const auto& x : fake) b += std::log(1.0 - disc_score(p, t, x));
    const double oracle = -a / 7.0 - b / 4.0;
    CHECK(std::abs(disc_loss(p, t, real, fake) - oracle) <= 1e-12);
  }

  TEST_CASE("a perfect discriminator's loss tends to 0; saturated scores hit the clamp") {
    // One-dimensional table: entities at 0, relation 0 at +1, relation 1 at -1.
    EmbeddingTable t;
    t.entities = Matrix::Zero(2, 1);
    t.relations = Matrix(2, 1);
    t.relations << 1.0, -1.0;
    auto p = DiscriminatorParams::zeros(1, 2);
    p.g_net.w1(1, 0) = 1.0;
    p.g_net.w1(1, 1) = -1.0;
    p.g_net.w2(0, 0) = 50.0;
    p.g_net.w2(1, 0) = -50.0;  // logit ±50.5 by relation sign
    const std::vector<Triplet> real{{0, 0, 1}, {1, 0, 0}};
    const std::vector<Triplet> fake{{0, 1, 1}, {1, 1, 1}};
    CHECK(disc_loss(p, t, real, fake) <= 1e-6);
    // Reals labelled fake: both terms saturate at the clamp and stay finite.
    CHECK(disc_loss(p, t, fake, real) == doctest::Approx(-2.0 * std::log(kScoreClamp)).epsilon(1e-6));
    DiscriminatorGrad g;
    disc_loss(p, t, fake, real, &g);
    for (const auto* m : g.tensors()) CHECK(m->cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("loss gradient matches central differences") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const auto t = test::random_table(6, 3, 3, rng);
      auto p = DiscriminatorParams::init(3, 4, rng);
      const auto real = random_triplets(5, 6, 3, rng);
      const auto fake = random_triplets(5, 6, 3, rng);
      DiscriminatorGrad g;
      disc_loss(p, t, real, fake, &g);
      auto loss = [&] { return disc_loss(p, t, real, fake); };
      CHECK(finite_diff_check(loss, p.tensors(), g.tensors(), 1e-6) <= 1e-5);
    }
  }

  TEST_CASE("training on a fixed separable batch drives the loss below 0.1") {
    Rng rng(6);
    const auto t = test::random_table(8, 2, 4, rng);
    auto p = DiscriminatorParams::init(4, 16, rng);
    const std::vector<Triplet> real{{0, 0, 1}, {2, 0, 3}, {4, 1, 5}, {6, 1, 7}};
    const std::vector<Triplet> fake{{1, 0, 0}, {3, 1, 2}, {5, 0, 4}, {7, 0, 6}};
    double loss = 0.0;
    for (int i = 0; i < 500; ++i) loss = disc_train_step(p, t, real, fake, {0.5, {}});
    CHECK(disc_loss(p, t, real, fake) < 0.1);
    CHECK(loss < 0.2);
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    Rng rng(7);
    const auto t = test::random_table(5, 2, 3, rng);
    auto p = DiscriminatorParams::init(3, 4, rng);
    const auto before = p;
    disc_train_step(p, t, random_triplets(4, 5, 2, rng), random_triplets(4, 5, 2, rng), {0.0, {}});
    CHECK(p.f_net.w1 == before.f_net.w1);
    CHECK(p.g_net.w2 == before.g_net.w2);
  }

  TEST_CASE("random corruptions never hit the target graph") {
    const auto pair = synthesize_aligned_pair(30, 3, 300, 0.9, 2);
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) CHECK_FALSE(pair.target.contains(random_corruption(pair.target, rng)));
    Rng a(9), b(9);
    for (int i = 0; i < 20; ++i) CHECK(random_corruption(pair.target, a) == random_corruption(pair.target, b));
  }

  TEST_CASE("fake batch composition follows the mode") {
    const TripletSource adv = [](Rng&) { return Triplet{1, 1, 1}; };
    const TripletSource rnd = [](Rng&) { return Triplet{0, 0, 0}; };
    Rng rng(10);
    const auto mixed = make_fake_batch(FakeSourceMode::RandomPlusAdversarial, adv, rnd, 5, rng);
    REQUIRE(mixed.size() == 5);
    CHECK(std::count(mixed.begin(), mixed.end(), Triplet{0, 0, 0}) == 2);
    CHECK(std::count(mixed.begin(), mixed.end(), Triplet{1, 1, 1}) == 3);
    const auto all_adv = make_fake_batch(FakeSourceMode::Adversarial, adv, rnd, 4, rng);
    CHECK(std::count(all_adv.begin(), all_adv.end(), Triplet{1, 1, 1}) == 4);
    const auto all_rnd = make_fake_batch(FakeSourceMode::Random, adv, rnd, 4, rng);
    CHECK(std::count(all_rnd.begin(), all_rnd.end(), Triplet{0, 0, 0}) == 4);
  }

  TEST_CASE("fake mode names parse") {
    CHECK(parse_fake_mode("adv") == FakeSourceMode::Adversarial);
    CHECK(parse_fake_mode("rand") == FakeSourceMode::Random);
    CHECK(parse_fake_mode("rand+adv") == FakeSourceMode::RandomPlusAdversarial);
    CHECK_THROWS_AS(parse_fake_mode("gan"), ArgumentError);
  }
}

#include <doctest.h>

#include <random>

#include "kga/error.hpp"
#include "kga/mutual_info.hpp"
#include "support.hpp"

using namespace kga;

namespace {

struct Toy {
  EmbeddingTable source, target;
  AlignmentTables view() const { return {source, target}; }
};

MiBatch random_batch(std::size_t n, Index ne, Rng& rng) {
  MiBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.joint.push_back({static_cast<Index>(uniform_index(rng, ne)), static_cast<Index>(uniform_index(rng, ne))});
    b.marginal_sources.push_back(static_cast<Index>(uniform_index(rng, ne)));
  }
  return b;
}

double one_stat(const MiEstimatorParams& p, const AlignmentTables& v, IndexPair pair) {
  const std::array<IndexPair, 1> one{pair};
  return mi_statistics(p, v, one)(0);
}

Vector dirichlet(std::size_t k, Rng& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gamma(rng);
  return v / v.sum();
}

}  // namespace

TEST_SUITE("mi-regularizer") {
  TEST_CASE("constant statistic gives an estimate of exactly 0") {
    Rng rng(1);
    const Toy t{test::random_table(6, 1, 3, rng), test::random_table(6, 1, 3, rng)};
    auto p = MiEstimatorParams{MlpParams::zeros(6, 4, 1)};
    p.t_net.b2(0, 0) = 2.5;
    CHECK(estimate_mi(p, random_batch(5, 6, rng), t.view()) == 0.0);
  }

  TEST_CASE("n = 1 reduces to T(joint) - T(marginal)") {
    Rng rng(2);
    const Toy t{test::random_table(6, 1, 3, rng), test::random_table(6, 1, 3, rng)};
    const auto p = MiEstimatorParams::init(3, 3, 5, rng);
    const auto b = random_batch(1, 6, rng);
    const double oracle =
        one_stat(p, t.view(), b.joint[0]) - one_stat(p, t.view(), {b.marginal_sources[0], b.joint[0].target});
    CHECK(std::abs(estimate_mi(p, b, t.view()) - oracle) <= 1e-12);
  }

  TEST_CASE("estimate matches a scalar recomputation to 1e-12") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Toy t{test::random_table(7, 1, 3, rng), test::random_table(7, 1, 3, rng)};
      const auto p = MiEstimatorParams::init(3, 3, 6, rng);
      const auto b = random_batch(9, 7, rng);
      double joint = 0.0, marg = 0.0;
      for (std::size_t i = 0; i < 9; ++i) {
        joint += one_stat(p, t.view(), b.joint[i]);
        marg += std::exp(one_stat(p, t.view(), {b.marginal_sources[i], b.joint[i].target}));
      }
      const double oracle = joint / 9.0 - std::log(marg / 9.0);
      CHECK(std::abs(estimate_mi(p, b, t.view()) - oracle) <= 1e-12);
    }
  }

  TEST_CASE("batch validation") {
    Rng rng(4);
    const Toy t{test::random_table(4, 1, 2, rng), test::random_table(4, 1, 2, rng)};
    const auto p = MiEstimatorParams::init(2, 2, 3, rng);
    MiBatch bad = random_batch(3, 4, rng);
    bad.marginal_sources.pop_back();
    CHECK_THROWS_AS(estimate_mi(p, bad, t.view()), ArgumentError);
    CHECK_THROWS_AS(estimate_mi(p, MiBatch{}, t.view()), ArgumentError);
  }

  TEST_CASE("gamma gradient matches central differences") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Toy t{test::random_table(6, 1, 3, rng), test::random_table(6, 1, 3, rng)};
      auto p = MiEstimatorParams::init(3, 3, 5, rng);
      const auto b = random_batch(6, 6, rng);
      MlpGrad g;
      estimate_mi(p, b, t.view(), &g);
      auto loss = [&] { return estimate_mi(p, b, t.view()); };
      CHECK(finite_diff_check(loss, p.t_net.tensors(), std::as_const(g).tensors(), 1e-6) <= 1e-5);
    }
  }

  TEST_CASE("training the statistic network tracks dependence") {
    Rng rng(6);
    const auto table = test::random_table(8, 1, 4, rng);
    const AlignmentTables view{table, table};
    const AlignmentParams deterministic{Matrix::Identity(4, 4), Matrix::Identity(4, 4), 200.0};
    const AlignmentParams independent{Matrix::Identity(4, 4), Matrix::Identity(4, 4), 0.0};

    auto dep = MiEstimatorParams::init(4, 4, 32, rng);
    for (int i = 0; i < 2000; ++i) {
      mi_train_step_gamma(dep, sample_mi_batch(deterministic, view, 64, rng), view, {0.05, {}});
    }
    CHECK(estimate_mi(dep, sample_mi_batch(deterministic, view, 4096, rng), view) > 0.5);

    auto ind = MiEstimatorParams::init(4, 4, 32, rng);
    for (int i = 0; i < 2000; ++i) {
      mi_train_step_gamma(ind, sample_mi_batch(independent, view, 64, rng), view, {0.05, {}});
    }
    CHECK(estimate_mi(ind, sample_mi_batch(independent, view, 4096, rng), view) <= 0.05);
  }

  TEST_CASE("theta gradient with constant statistic reduces to the direct formula") {
    Rng rng(7);
    const Toy t{test::random_table(5, 1, 3, rng), test::random_table(5, 1, 3, rng)};
    const auto align = test::random_alignment(3, 1.2, rng);
    auto mi = MiEstimatorParams{MlpParams::zeros(6, 4, 1)};
    mi.t_net.b2(0, 0) = 1.5;
    const auto b = random_batch(4, 5, rng);
    Matrix oracle = Matrix::Zero(3, 3);
    for (const auto& pr : b.joint) {
      oracle += (1.5 / 4.0 - 1.0 / 4.0) * entity_logprob_grad(align, t.view(), pr.source, pr.target);
    }
    CHECK((mi_grad_theta(mi, align, t.view(), b) - oracle).cwiseAbs().maxCoeff() <= 1e-12);

    const auto flat = test::random_alignment(3, 0.0, rng);
    const auto random_mi = MiEstimatorParams::init(3, 3, 4, rng);
    CHECK(mi_grad_theta(random_mi, flat, t.view(), b).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("bound check: independence, disjoint supports, random instances") {
    const Vector uniform = Vector::Constant(4, 0.25);
    Matrix same(4, 3);
    for (int u = 0; u < 4; ++u) same.row(u) << 0.2, 0.3, 0.5;
    const auto ind = verify_mi_lower_bound(uniform, same);
    CHECK(std::abs(ind.mi) <= 1e-15);
    CHECK(std::abs(ind.mean_kl) <= 1e-15);

    const Matrix disjoint = Matrix::Identity(4, 4);
    const auto dis = verify_mi_lower_bound(uniform, disjoint);
    CHECK(dis.mi == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    // 12 of 16 ordered pairs differ, each with KL = -log(1e-12).
    CHECK(dis.mean_kl == doctest::Approx(12.0 / 16.0 * -std::log(1e-12)).epsilon(1e-12));
    CHECK(dis.mean_kl > dis.mi);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const auto ns = 1 + uniform_index(rng, 16), nt = 1 + uniform_index(rng, 16);
      const Vector pd = dirichlet(ns, rng);
      Matrix cond(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(nt));
      for (std::size_t u = 0; u < ns; ++u) cond.row(static_cast<Eigen::Index>(u)) = dirichlet(nt, rng).transpose();
      const auto r = verify_mi_lower_bound(pd, cond);
      CHECK(r.mi <= r.mean_kl + 1e-9);
      CHECK(r.mi >= -1e-12);
    }

    CHECK_THROWS_AS(verify_mi_lower_bound(Vector::Constant(2, 0.3), Matrix::Constant(2, 2, 0.5)), ArgumentError);
  }
}

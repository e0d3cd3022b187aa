#pragma once

// Exact gradients on enumerable toys, computed by summing over every outcome.
// Shared by the unit and acceptance suites as the oracle for Monte Carlo
// estimators.

#include <cmath>
#include <vector>

#include "kga/alignment.hpp"
#include "kga/discriminator.hpp"
#include "kga/mutual_info.hpp"
#include "kga/trainer.hpp"

namespace kga::test {

/// ∇_θ of -E_{x_s ~ U(sources)} E_{x_t ~ p(·|x_s)} [R(D(x_t))].
inline AlignmentGrad exact_reward_grad(const AlignmentParams& align, const DiscriminatorParams& disc,
                                       const AlignmentTables& tables, const std::vector<Triplet>& sources,
                                       RewardKind kind) {
  AlignmentGrad total = AlignmentGrad::zeros_like(align);
  const auto ne = static_cast<Index>(tables.target.num_entities());
  const auto nr = static_cast<Index>(tables.target.num_relations());
  const double w_source = 1.0 / static_cast<double>(sources.size());
  for (const auto& xs : sources) {
    for (Index h = 0; h < ne; ++h) {
      for (Index r = 0; r < nr; ++r) {
        for (Index t = 0; t < ne; ++t) {
          const Triplet xt{h, r, t};
          const double p = std::exp(triplet_align_logprob(align, tables, xs, xt));
          const double d = std::clamp(disc_score(disc, tables.target, xt), kScoreClamp, 1.0 - kScoreClamp);
          accumulate_logprob_grad(align, tables, xs, xt, -w_source * p * reward(kind, d), total);
        }
      }
    }
  }
  return total;
}

/// ∇_θe of E_{p(s)p(t|s)}[T] - log E_{p(s')q(t)}[exp T] with p(s) uniform over
/// source entities and q the induced target marginal.
inline Matrix exact_mi_grad(const MiEstimatorParams& mi, const AlignmentParams& align,
                            const AlignmentTables& tables) {
  const auto ns = static_cast<Index>(tables.source.num_entities());
  const auto nt = static_cast<Index>(tables.target.num_entities());
  const double ps = 1.0 / static_cast<double>(ns);
  std::vector<IndexPair> pairs;
  for (Index s = 0; s < ns; ++s) {
    for (Index t = 0; t < nt; ++t) pairs.push_back({s, t});
  }
  const Vector stats = mi_statistics(mi, tables, pairs);
  const auto T = [&](Index s, Index t) { return stats(static_cast<Eigen::Index>(s * nt + t)); };

  // m(t) = E_{s'}[exp T(s', t)]
  std::vector<double> m(nt, 0.0);
  for (Index t = 0; t < nt; ++t) {
    for (Index s = 0; s < ns; ++s) m[t] += ps * std::exp(T(s, t));
  }
  std::vector<Vector> cond;
  for (Index s = 0; s < ns; ++s) cond.push_back(entity_align_dist(align, tables, s).log_probs.array().exp());
  double z = 0.0;
  for (Index s = 0; s < ns; ++s) {
    for (Index t = 0; t < nt; ++t) z += ps * cond[s](t) * m[t];
  }

  Matrix grad = Matrix::Zero(align.theta_e.rows(), align.theta_e.cols());
  for (Index s = 0; s < ns; ++s) {
    for (Index t = 0; t < nt; ++t) {
      const double w = ps * cond[s](t) * (T(s, t) - m[t] / z);
      grad += w * entity_logprob_grad(align, tables, s, t);
    }
  }
  return grad;
}

/// Running per-entry mean and standard error of a stream of matrices.
class MatrixMoments {
 public:
  void add(const Matrix& x) {
    if (n_ == 0) {
      sum_ = Matrix::Zero(x.rows(), x.cols());
      sum_sq_ = Matrix::Zero(x.rows(), x.cols());
    }
    sum_ += x;
    sum_sq_ += x.cwiseProduct(x);
    ++n_;
  }
  Matrix mean() const { return sum_ / static_cast<double>(n_); }
  Matrix standard_error() const {
    const double n = static_cast<double>(n_);
    const Matrix var = (sum_sq_ / n - mean().cwiseProduct(mean())) * (n / (n - 1.0));
    return (var.cwiseMax(0.0) / n).cwiseSqrt();
  }
  std::size_t count() const { return n_; }

 private:
  Matrix sum_, sum_sq_;
  std::size_t n_ = 0;
};

/// Largest |mean - exact| / SE over entries; entries with zero SE must match exactly.
inline double max_z_score(const MatrixMoments& mc, const Matrix& exact) {
  const Matrix diff = (mc.mean() - exact).cwiseAbs();
  const Matrix se = mc.standard_error();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    const double s = se.data()[i];
    const double z = s > 0.0 ? diff.data()[i] / s : (diff.data()[i] <= 1e-15 ? 0.0 : HUGE_VAL);
    worst = std::max(worst, z);
  }
  return worst;
}

}  // namespace kga::test

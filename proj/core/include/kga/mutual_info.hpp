#pragma once

#include <vector>

#include "kga/alignment.hpp"
#include "kga/numeric.hpp"

namespace kga {

/// Statistic network T(e_s, e_t) on concatenated source/target entity vectors.
struct MiEstimatorParams {
  MlpParams t_net;  // d_s + d_t → hidden → 1

  static MiEstimatorParams init(std::size_t source_dim, std::size_t target_dim, std::size_t hidden,
                                Rng& rng);
};

/// n joint pairs (s_i, t_i) with t_i ~ p(·|s_i), plus n extra sources s_{n+i}.
/// Marginal pairs are (s_{n+i}, t_i).
struct MiBatch {
  std::vector<IndexPair> joint;
  std::vector<Index> marginal_sources;

  std::size_t size() const { return joint.size(); }
  void validate() const;
};

/// Draws 2n sources uniformly from the source entity vocabulary and aligns the
/// first n with the current alignment function.
MiBatch sample_mi_batch(const AlignmentParams& align, const AlignmentTables& tables, std::size_t n,
                        Rng& rng);

/// T for each (source, target) pair.
Vector mi_statistics(const MiEstimatorParams& params, const AlignmentTables& tables,
                     std::span<const IndexPair> pairs);

/// Donsker-Varadhan estimate: mean T(joint) - log mean exp T(marginal).
/// With `grad`, also writes ∂estimate/∂γ.
double estimate_mi(const MiEstimatorParams& params, const MiBatch& batch,
                   const AlignmentTables& tables, MlpGrad* grad = nullptr);

/// One SGD ascent step on the estimate; returns the estimate before the step.
double mi_train_step_gamma(MiEstimatorParams& params, const MiBatch& batch,
                           const AlignmentTables& tables, const SgdConfig& sgd);

/// Score-function estimate of ∇_θe of the bound (ascent direction):
///   Σ_i [T(s_i, t_i)/n - softmax_i(T(s_{n+i}, t_i))] ∇ log p(t_i | s_i)
Matrix mi_grad_theta(const MiEstimatorParams& mi, const AlignmentParams& align,
                     const AlignmentTables& tables, const MiBatch& batch);

struct MiBoundCheck {
  double mean_kl = 0.0;
  double mi = 0.0;
};

/// Exact mean pairwise KL between conditionals and exact mutual information by
/// enumeration. Rows of `conditional` are p(·|source). Zero probabilities in
/// the second KL argument are floored at 1e-12.
MiBoundCheck verify_mi_lower_bound(const Vector& source_dist, const Matrix& conditional);

}  // namespace kga

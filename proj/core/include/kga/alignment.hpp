#pragma once

#include "kga/embedding.hpp"
#include "kga/graph.hpp"
#include "kga/numeric.hpp"
#include "kga/rng.hpp"

namespace kga {

/// Linear alignment functions: a source vector v maps to θ·v in the target
/// space, and p(target | source) ∝ exp(-eta · ‖θ·v - v_target‖²).
struct AlignmentParams {
  Matrix theta_e;  // d_t × d_s
  Matrix theta_r;  // d_t × d_s
  double eta = 1.0;
};

/// The two frozen embedding tables an alignment operates between.
struct AlignmentTables {
  const EmbeddingTable& source;
  const EmbeddingTable& target;
};

/// Log-probabilities over the whole target vocabulary.
struct AlignmentDistribution {
  Vector log_probs;

  double prob(Index i) const { return std::exp(log_probs(i)); }
  std::size_t size() const { return static_cast<std::size_t>(log_probs.size()); }
};

/// ‖θ·v - row_j‖² for every row of `targets`.
Vector projected_sq_distances(const Matrix& theta, const RowVector& v, const Matrix& targets);

/// log softmax(-eta · d). The minimum distance is subtracted before scaling, so
/// a common offset on d cancels before any rounding of the exponent.
Vector log_softmax_neg_scaled(const Vector& sq_distances, double eta);

AlignmentDistribution entity_align_dist(const AlignmentParams& params, const AlignmentTables& tables,
                                        Index source_entity);
AlignmentDistribution relation_align_dist(const AlignmentParams& params,
                                          const AlignmentTables& tables, Index source_relation);

/// log p(h_t|h_s) + log p(r_t|r_s) + log p(t_t|t_s).
double triplet_align_logprob(const AlignmentParams& params, const AlignmentTables& tables,
                             const Triplet& source, const Triplet& target);

/// Inverse-CDF draw from a categorical given by log-probabilities.
Index sample_categorical(const Vector& log_probs, Rng& rng);

Triplet sample_aligned_triplet(const AlignmentParams& params, const AlignmentTables& tables,
                               const Triplet& source, Rng& rng);

struct AlignmentGrad {
  Matrix theta_e;
  Matrix theta_r;

  static AlignmentGrad zeros_like(const AlignmentParams& p);
  AlignmentGrad& operator+=(const AlignmentGrad& o);
  AlignmentGrad& operator*=(double s);
};

/// ∇_θe log p(target_entity | source_entity), with exact normalisation.
Matrix entity_logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                           Index source_entity, Index target_entity);

/// grad += weight · ∇_θ log p(target | source).
void accumulate_logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                             const Triplet& source, const Triplet& target, double weight,
                             AlignmentGrad& grad);

AlignmentGrad logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                           const Triplet& source, const Triplet& target);

/// Orthogonal θ minimising Σ‖θ·x_i - y_i‖² over the seed pairs (θ = U·Vᵀ from
/// the SVD of Yᵀ·X). θ_r is fitted from relation seeds when there are any and
/// copied from θ_e otherwise.
AlignmentParams procrustes_pretrain(const AlignmentSeeds& seeds, const AlignmentTables& tables,
                                    double eta = 1.0);

/// Identity plus uniform noise in ±noise, for runs without seeds.
AlignmentParams noisy_identity_init(std::size_t source_dim, std::size_t target_dim, double eta,
                                    Rng& rng, double noise = 0.01);

}  // namespace kga

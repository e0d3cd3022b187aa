#include "kga/alignment.hpp"

#include <cmath>

#include "kga/error.hpp"

namespace kga {

namespace {

void check_dims(const Matrix& theta, const Matrix& source, const Matrix& target, const char* what) {
  if (theta.cols() != source.cols() || theta.rows() != target.cols()) {
    throw ShapeError(std::string(what) + " projection is " + std::to_string(theta.rows()) + "x" +
                     std::to_string(theta.cols()) + " but embeddings are " +
                     std::to_string(source.cols()) + " -> " + std::to_string(target.cols()));
  }
}

void check_index(Index i, const Matrix& table, const char* what) {
  if (i >= table.rows()) throw IndexError(std::string(what) + " index " + std::to_string(i) + " out of range");
}

AlignmentDistribution align_dist(const Matrix& theta, double eta, const Matrix& source,
                                 const Matrix& target, Index s, const char* what) {
  check_dims(theta, source, target, what);
  check_index(s, source, what);
  return {log_softmax_neg_scaled(projected_sq_distances(theta, source.row(s), target), eta)};
}

// ∇_θ log p(t|s) = 2η (v_t - Σ_j p_j v_j) v_sᵀ
void accumulate_component(const Matrix& theta, double eta, const Matrix& source,
                          const Matrix& target, Index s, Index t, double weight, Matrix& grad,
                          const char* what) {
  if (eta == 0.0 || weight == 0.0) {
    check_index(s, source, what);
    check_index(t, target, what);
    return;
  }
  const auto dist = align_dist(theta, eta, source, target, s, what);
  check_index(t, target, what);
  const Vector probs = dist.log_probs.array().exp();
  const RowVector expected = probs.transpose() * target;
  const RowVector diff = target.row(t) - expected;
  if (!diff.allFinite()) throw NumericError(std::string(what) + " alignment gradient is not finite");
  grad.noalias() += (2.0 * eta * weight) * diff.transpose() * source.row(s);
}

}  // namespace

Vector projected_sq_distances(const Matrix& theta, const RowVector& v, const Matrix& targets) {
  const Vector proj = theta * v.transpose();
  // ‖p - t‖² row by row; direct differences keep exact zeros exact.
  return (targets.rowwise() - proj.transpose()).rowwise().squaredNorm();
}

Vector log_softmax_neg_scaled(const Vector& sq_distances, double eta) {
  if (!(eta >= 0.0)) throw ArgumentError("temperature must be non-negative");
  if (sq_distances.size() == 0) throw ArgumentError("empty target vocabulary");
  const double min_d = sq_distances.minCoeff();
  Vector z = -eta * (sq_distances.array() - min_d);
  const double lse = std::log(z.array().exp().sum());
  z.array() -= lse;
  return z;
}

AlignmentDistribution entity_align_dist(const AlignmentParams& params, const AlignmentTables& tables,
                                        Index source_entity) {
  return align_dist(params.theta_e, params.eta, tables.source.entities, tables.target.entities,
                    source_entity, "entity");
}

AlignmentDistribution relation_align_dist(const AlignmentParams& params,
                                          const AlignmentTables& tables, Index source_relation) {
  return align_dist(params.theta_r, params.eta, tables.source.relations, tables.target.relations,
                    source_relation, "relation");
}

double triplet_align_logprob(const AlignmentParams& params, const AlignmentTables& tables,
                             const Triplet& source, const Triplet& target) {
  const auto h = entity_align_dist(params, tables, source.head);
  const auto r = relation_align_dist(params, tables, source.relation);
  const auto t = entity_align_dist(params, tables, source.tail);
  if (target.head >= h.size() || target.tail >= t.size() || target.relation >= r.size()) {
    throw IndexError("target triplet index out of range");
  }
  return h.log_probs(target.head) + r.log_probs(target.relation) + t.log_probs(target.tail);
}

Index sample_categorical(const Vector& log_probs, Rng& rng) {
  const double u = uniform_real(rng, 0.0, 1.0);
  double cum = 0.0;
  for (Eigen::Index i = 0; i < log_probs.size(); ++i) {
    cum += std::exp(log_probs(i));
    if (u < cum) return static_cast<Index>(i);
  }
  // Rounding left the total just under u; take the last non-empty category.
  for (Eigen::Index i = log_probs.size() - 1; i >= 0; --i) {
    if (std::exp(log_probs(i)) > 0.0) return static_cast<Index>(i);
  }
  return 0;
}

Triplet sample_aligned_triplet(const AlignmentParams& params, const AlignmentTables& tables,
                               const Triplet& source, Rng& rng) {
  Triplet out;
  out.head = sample_categorical(entity_align_dist(params, tables, source.head).log_probs, rng);
  out.relation = sample_categorical(relation_align_dist(params, tables, source.relation).log_probs, rng);
  out.tail = sample_categorical(entity_align_dist(params, tables, source.tail).log_probs, rng);
  return out;
}

AlignmentGrad AlignmentGrad::zeros_like(const AlignmentParams& p) {
  return {Matrix::Zero(p.theta_e.rows(), p.theta_e.cols()),
          Matrix::Zero(p.theta_r.rows(), p.theta_r.cols())};
}

AlignmentGrad& AlignmentGrad::operator+=(const AlignmentGrad& o) {
  theta_e += o.theta_e;
  theta_r += o.theta_r;
  return *this;
}

AlignmentGrad& AlignmentGrad::operator*=(double s) {
  theta_e *= s;
  theta_r *= s;
  return *this;
}

Matrix entity_logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                           Index source_entity, Index target_entity) {
  Matrix g = Matrix::Zero(params.theta_e.rows(), params.theta_e.cols());
  accumulate_component(params.theta_e, params.eta, tables.source.entities, tables.target.entities,
                       source_entity, target_entity, 1.0, g, "entity");
  return g;
}

void accumulate_logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                             const Triplet& source, const Triplet& target, double weight,
                             AlignmentGrad& grad) {
  const auto& se = tables.source.entities;
  const auto& te = tables.target.entities;
  accumulate_component(params.theta_e, params.eta, se, te, source.head, target.head, weight,
                       grad.theta_e, "entity");
  accumulate_component(params.theta_r, params.eta, tables.source.relations,
                       tables.target.relations, source.relation, target.relation, weight,
                       grad.theta_r, "relation");
  accumulate_component(params.theta_e, params.eta, se, te, source.tail, target.tail, weight,
                       grad.theta_e, "entity");
}

AlignmentGrad logprob_grad(const AlignmentParams& params, const AlignmentTables& tables,
                           const Triplet& source, const Triplet& target) {
  auto g = AlignmentGrad::zeros_like(params);
  accumulate_logprob_grad(params, tables, source, target, 1.0, g);
  return g;
}

namespace {

Matrix orthogonal_fit(const std::vector<IndexPair>& pairs, const Matrix& source,
                      const Matrix& target) {
  Matrix x(pairs.size(), source.cols());
  Matrix y(pairs.size(), target.cols());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    check_index(pairs[i].source, source, "seed source");
    check_index(pairs[i].target, target, "seed target");
    x.row(i) = source.row(pairs[i].source);
    y.row(i) = target.row(pairs[i].target);
  }
  const Matrix cross = y.transpose() * x;
  const auto f = svd(cross);
  return f.u * f.v.transpose();
}

}  // namespace

AlignmentParams procrustes_pretrain(const AlignmentSeeds& seeds, const AlignmentTables& tables,
                                    double eta) {
  if (seeds.entity_pairs.empty()) throw ArgumentError("Procrustes needs at least one entity seed pair");
  if (tables.source.dim() != tables.target.dim()) {
    throw ShapeError("Procrustes needs equal source and target dims");
  }
  AlignmentParams params;
  params.eta = eta;
  params.theta_e = orthogonal_fit(seeds.entity_pairs, tables.source.entities, tables.target.entities);
  params.theta_r = seeds.relation_pairs.empty()
                       ? params.theta_e
                       : orthogonal_fit(seeds.relation_pairs, tables.source.relations,
                                        tables.target.relations);
  return params;
}

AlignmentParams noisy_identity_init(std::size_t source_dim, std::size_t target_dim, double eta,
                                    Rng& rng, double noise) {
  AlignmentParams params;
  params.eta = eta;
  auto make = [&]() {
    Matrix m = Matrix::Identity(target_dim, source_dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += uniform_real(rng, -noise, noise);
    return m;
  };
  params.theta_e = make();
  params.theta_r = make();
  return params;
}

}  // namespace kga

#include "kga/mutual_info.hpp"

#include <cmath>
#include <utility>

#include "kga/error.hpp"

namespace kga {

MiEstimatorParams MiEstimatorParams::init(std::size_t source_dim, std::size_t target_dim,
                                          std::size_t hidden, Rng& rng) {
  return {MlpParams::init(source_dim + target_dim, hidden, 1, rng)};
}

void MiBatch::validate() const {
  if (joint.empty()) throw ArgumentError("MI batch must hold at least one pair");
  if (joint.size() != marginal_sources.size()) {
    throw ArgumentError("MI batch needs as many marginal sources as joint pairs");
  }
}

MiBatch sample_mi_batch(const AlignmentParams& align, const AlignmentTables& tables, std::size_t n,
                        Rng& rng) {
  const std::size_t ne = tables.source.num_entities();
  if (ne == 0 || n == 0) throw ArgumentError("MI batch needs entities and n >= 1");
  MiBatch batch;
  batch.joint.reserve(n);
  batch.marginal_sources.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = static_cast<Index>(uniform_index(rng, ne));
    const auto t = sample_categorical(entity_align_dist(align, tables, s).log_probs, rng);
    batch.joint.push_back({s, t});
  }
  for (std::size_t i = 0; i < n; ++i) {
    batch.marginal_sources.push_back(static_cast<Index>(uniform_index(rng, ne)));
  }
  return batch;
}

namespace {

Matrix pair_inputs(const MiEstimatorParams& params, const AlignmentTables& tables,
                   std::span<const IndexPair> pairs) {
  const auto ds = static_cast<Eigen::Index>(tables.source.dim());
  const auto dt = static_cast<Eigen::Index>(tables.target.dim());
  if (params.t_net.input_dim() != static_cast<std::size_t>(ds + dt)) {
    throw ShapeError("MI statistic network expects input dim " +
                     std::to_string(params.t_net.input_dim()));
  }
  Matrix in(static_cast<Eigen::Index>(pairs.size()), ds + dt);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].source >= tables.source.num_entities() ||
        pairs[i].target >= tables.target.num_entities()) {
      throw IndexError("MI pair index out of range");
    }
    in.row(i) << tables.source.entities.row(pairs[i].source),
        tables.target.entities.row(pairs[i].target);
  }
  return in;
}

std::vector<IndexPair> all_pairs(const MiBatch& batch) {
  std::vector<IndexPair> pairs = batch.joint;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    pairs.push_back({batch.marginal_sources[i], batch.joint[i].target});
  }
  return pairs;
}

struct DvTerms {
  double estimate;
  Vector joint_t;
  Vector softmax;  // over marginal statistics
};

DvTerms dv_terms(const Vector& stats, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  DvTerms out;
  out.joint_t = stats.head(nn);
  const Vector marg = stats.tail(nn);
  const double m = marg.maxCoeff();
  const Vector e = (marg.array() - m).exp();
  const double sum = e.sum();
  out.softmax = e / sum;
  const double log_mean_exp = m + std::log(sum) - std::log(static_cast<double>(n));
  out.estimate = out.joint_t.mean() - log_mean_exp;
  if (!std::isfinite(out.estimate)) throw NumericError("MI estimate is not finite");
  return out;
}

}  // namespace

Vector mi_statistics(const MiEstimatorParams& params, const AlignmentTables& tables,
                     std::span<const IndexPair> pairs) {
  return mlp_apply(params.t_net, pair_inputs(params, tables, pairs)).col(0);
}

double estimate_mi(const MiEstimatorParams& params, const MiBatch& batch,
                   const AlignmentTables& tables, MlpGrad* grad) {
  batch.validate();
  const auto pairs = all_pairs(batch);
  const std::size_t n = batch.size();
  if (!grad) return dv_terms(mi_statistics(params, tables, pairs), n).estimate;

  auto fwd = mlp_forward(params.t_net, pair_inputs(params, tables, pairs));
  const auto terms = dv_terms(fwd.output.col(0), n);
  Matrix dout(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    dout(i, 0) = 1.0 / static_cast<double>(n);
    dout(n + i, 0) = -terms.softmax(i);
  }
  *grad = mlp_backward(params.t_net, fwd.cache, dout).params;
  return terms.estimate;
}

double mi_train_step_gamma(MiEstimatorParams& params, const MiBatch& batch,
                           const AlignmentTables& tables, const SgdConfig& sgd) {
  MlpGrad grad;
  const double estimate = estimate_mi(params, batch, tables, &grad);
  // Ascent on the estimate is descent on its negation.
  for (auto* g : grad.tensors()) *g = -*g;
  auto p = params.t_net.tensors();
  const auto g = std::as_const(grad).tensors();
  sgd_step(p, g, sgd);
  return estimate;
}

Matrix mi_grad_theta(const MiEstimatorParams& mi, const AlignmentParams& align,
                     const AlignmentTables& tables, const MiBatch& batch) {
  batch.validate();
  const std::size_t n = batch.size();
  const auto terms = dv_terms(mi_statistics(mi, tables, all_pairs(batch)), n);
  Matrix grad = Matrix::Zero(align.theta_e.rows(), align.theta_e.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double w = terms.joint_t(i) / static_cast<double>(n) - terms.softmax(i);
    if (w == 0.0) continue;
    grad += w * entity_logprob_grad(align, tables, batch.joint[i].source, batch.joint[i].target);
  }
  return grad;
}

MiBoundCheck verify_mi_lower_bound(const Vector& source_dist, const Matrix& conditional) {
  constexpr double kTol = 1e-9;
  constexpr double kFloor = 1e-12;
  const auto ns = source_dist.size();
  if (ns == 0 || conditional.rows() != ns || conditional.cols() == 0) {
    throw ArgumentError("source distribution and conditional table shapes disagree");
  }
  if ((source_dist.array() < 0.0).any() || std::abs(source_dist.sum() - 1.0) > kTol) {
    throw ArgumentError("source distribution is not normalised");
  }
  for (Eigen::Index u = 0; u < ns; ++u) {
    if ((conditional.row(u).array() < 0.0).any() || std::abs(conditional.row(u).sum() - 1.0) > kTol) {
      throw ArgumentError("conditional row " + std::to_string(u) + " is not normalised");
    }
  }
  const RowVector marginal = source_dist.transpose() * conditional;

  MiBoundCheck out;
  for (Eigen::Index u = 0; u < ns; ++u) {
    if (source_dist(u) == 0.0) continue;
    for (Eigen::Index t = 0; t < conditional.cols(); ++t) {
      const double p = conditional(u, t);
      if (p > 0.0) out.mi += source_dist(u) * p * (std::log(p) - std::log(marginal(t)));
    }
    for (Eigen::Index v = 0; v < ns; ++v) {
      if (source_dist(v) == 0.0) continue;
      double kl = 0.0;
      for (Eigen::Index t = 0; t < conditional.cols(); ++t) {
        const double p = conditional(u, t);
        if (p > 0.0) kl += p * (std::log(p) - std::log(std::max(conditional(v, t), kFloor)));
      }
      out.mean_kl += source_dist(u) * source_dist(v) * kl;
    }
  }
  return out;
}

}  // namespace kga

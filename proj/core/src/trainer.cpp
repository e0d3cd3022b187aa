#include "kga/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <utility>

#include "kga/checkpoint_io.hpp"
#include "kga/error.hpp"
#include "kga/evaluation.hpp"

namespace kga {

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::LogX: return "log";
    case RewardKind::LogXOverOneMinusX: return "log-ratio";
    case RewardKind::XOverOneMinusX: return "ratio";
    case RewardKind::X: return "x";
  }
  return "unknown";
}

RewardKind parse_reward_kind(const std::string& name) {
  if (name == "log") return RewardKind::LogX;
  if (name == "log-ratio") return RewardKind::LogXOverOneMinusX;
  if (name == "ratio") return RewardKind::XOverOneMinusX;
  if (name == "x") return RewardKind::X;
  throw ArgumentError("unknown reward '" + name + "' (log, log-ratio, ratio, x)");
}

double reward(RewardKind kind, double d) {
  if (!(d > 0.0 && d < 1.0)) throw ArgumentError("reward is defined on (0, 1), got " + std::to_string(d));
  switch (kind) {
    case RewardKind::LogX: return std::log(d);
    case RewardKind::LogXOverOneMinusX: return std::log(d) - std::log1p(-d);
    case RewardKind::XOverOneMinusX: return d / (1.0 - d);
    case RewardKind::X: return d;
  }
  return 0.0;
}

void TrainConfig::validate() const {
  if (batch_size == 0 || mi_batch_size == 0) throw ArgumentError("batch sizes must be positive");
  if (!(mi_weight >= 0.0)) throw ArgumentError("MI weight must be non-negative");
  if (!(align_lr > 0.0 && disc_lr > 0.0 && mi_lr > 0.0 && pretrain_lr > 0.0)) {
    throw ArgumentError("learning rates must be positive");
  }
  if (hidden_dim == 0) throw ArgumentError("hidden dim must be positive");
  if (!(eta > 0.0)) throw ArgumentError("temperature must be positive");
  if (eval_every == 0) throw ArgumentError("eval_every must be positive");
  if (patience == 0) throw ArgumentError("patience must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) throw ArgumentError("clip norm must be positive");
}

std::uint64_t config_digest(const TrainConfig& c) {
  std::ostringstream s;
  s.precision(17);
  s << to_string(c.reward) << '|' << c.mi_weight << '|' << to_string(c.fake_mode) << '|'
    << c.batch_size << '|' << c.mi_batch_size << '|' << c.max_steps << '|' << c.align_lr << '|'
    << c.disc_lr << '|' << c.mi_lr << '|' << c.pretrain_lr << '|' << c.disc_pretrain_steps << '|'
    << c.mi_pretrain_steps << '|' << c.hidden_dim << '|' << c.eta << '|' << c.init_noise << '|'
    << (c.clip_norm ? *c.clip_norm : 0.0) << '|' << static_cast<int>(c.baseline) << '|'
    << static_cast<int>(c.mi_update) << '|' << c.eval_every << '|' << c.patience << '|'
    << c.rng_seed;
  return fnv1a(s.str());
}

namespace {

void round_mlp(MlpParams& p) {
  for (auto* m : p.tensors()) round_to_float(*m);
}

// 64-bit integers travel as 16-bit chunks so each fits a float exactly.
Matrix encode_u64(std::uint64_t v) {
  Matrix m(1, 4);
  for (int i = 0; i < 4; ++i) m(0, i) = static_cast<double>((v >> (16 * (3 - i))) & 0xffffu);
  return m;
}

std::uint64_t decode_u64(const Matrix& m) {
  if (m.size() != 4) throw FormatError("malformed integer field in checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 16) | static_cast<std::uint64_t>(m(0, i));
  return v;
}

void put_mlp(MatrixArchive& a, const std::string& prefix, const MlpParams& p) {
  a.put(prefix + ".w1", p.w1);
  a.put(prefix + ".b1", p.b1);
  a.put(prefix + ".w2", p.w2);
  a.put(prefix + ".b2", p.b2);
}

MlpParams get_mlp(const MatrixArchive& a, const std::string& prefix) {
  MlpParams p;
  p.w1 = a.get(prefix + ".w1");
  p.b1 = a.get(prefix + ".b1");
  p.w2 = a.get(prefix + ".w2");
  p.b2 = a.get(prefix + ".b2");
  if (p.b1.rows() != 1 || p.b1.cols() != p.w1.cols() || p.w2.rows() != p.w1.cols() ||
      p.b2.rows() != 1 || p.b2.cols() != p.w2.cols()) {
    throw FormatError("inconsistent network shapes for '" + prefix + "'");
  }
  return p;
}

}  // namespace

Checkpoint snapshot(const AlignmentParams& align, const DiscriminatorParams& disc,
                    const MiEstimatorParams& mi, std::uint64_t step, std::uint64_t digest) {
  Checkpoint c{align, disc, mi, step, digest};
  round_to_float(c.alignment.theta_e);
  round_to_float(c.alignment.theta_r);
  c.alignment.eta = static_cast<double>(static_cast<float>(c.alignment.eta));
  round_mlp(c.discriminator.f_net);
  round_mlp(c.discriminator.g_net);
  round_mlp(c.mi_estimator.t_net);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  MatrixArchive a;
  a.kind = CheckpointKind::Alignment;
  a.put("theta_e", ckpt.alignment.theta_e);
  a.put("theta_r", ckpt.alignment.theta_r);
  a.put("eta", Matrix::Constant(1, 1, ckpt.alignment.eta));
  put_mlp(a, "disc.f", ckpt.discriminator.f_net);
  put_mlp(a, "disc.g", ckpt.discriminator.g_net);
  put_mlp(a, "mi.t", ckpt.mi_estimator.t_net);
  a.put("meta.step", encode_u64(ckpt.step));
  a.put("meta.digest", encode_u64(ckpt.config_digest));
  write_archive(a, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  const auto a = read_archive(path);
  if (a.kind != CheckpointKind::Alignment) {
    throw FormatError("'" + path.string() + "' is not an alignment checkpoint");
  }
  Checkpoint c;
  c.alignment.theta_e = a.get("theta_e");
  c.alignment.theta_r = a.get("theta_r");
  const Matrix& eta = a.get("eta");
  if (eta.size() != 1) throw FormatError("malformed temperature in checkpoint");
  c.alignment.eta = eta(0, 0);
  c.discriminator.f_net = get_mlp(a, "disc.f");
  c.discriminator.g_net = get_mlp(a, "disc.g");
  c.mi_estimator.t_net = get_mlp(a, "mi.t");
  c.step = decode_u64(a.get("meta.step"));
  c.config_digest = decode_u64(a.get("meta.digest"));
  if (expected_dim) {
    const auto d = static_cast<Eigen::Index>(*expected_dim);
    if (c.alignment.theta_e.rows() != d || c.alignment.theta_e.cols() != d ||
        c.alignment.theta_r.rows() != d || c.alignment.theta_r.cols() != d) {
      throw ShapeError("checkpoint '" + path.string() + "' has dim " +
                       std::to_string(c.alignment.theta_e.cols()) + ", expected " +
                       std::to_string(*expected_dim));
    }
  }
  if (static_cast<Eigen::Index>(c.discriminator.f_net.input_dim()) != c.alignment.theta_e.rows()) {
    throw ShapeError("checkpoint discriminator dim does not match its alignment dim");
  }
  return c;
}

ReinforceEstimate reinforce_gradient(const AlignmentParams& align, const DiscriminatorParams& disc,
                                     const AlignmentTables& tables, std::span<const Triplet> sources,
                                     RewardKind kind, Baseline baseline, Rng& rng) {
  if (sources.empty()) throw ArgumentError("REINFORCE batch must be nonempty");
  std::vector<Triplet> aligned;
  aligned.reserve(sources.size());
  for (const auto& x : sources) aligned.push_back(sample_aligned_triplet(align, tables, x, rng));
  const Vector scores = disc_scores(disc, tables.target, aligned);
  const auto n = static_cast<double>(sources.size());
  Vector rewards(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    rewards(i) = reward(kind, std::clamp(scores(i), kScoreClamp, 1.0 - kScoreClamp));
  }
  const double total = rewards.sum();

  ReinforceEstimate out;
  out.grad = AlignmentGrad::zeros_like(align);
  out.mean_reward = total / n;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    double advantage = rewards(i);
    if (baseline == Baseline::BatchMean && sources.size() > 1) {
      advantage -= (total - rewards(i)) / (n - 1.0);
    }
    accumulate_logprob_grad(align, tables, sources[i], aligned[i], -advantage / n, out.grad);
  }
  return out;
}

namespace {

std::vector<Triplet> sample_source_batch(const KnowledgeGraph& g, std::size_t n, Rng& rng) {
  std::vector<Triplet> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(g.triplets()[uniform_index(rng, g.num_triplets())]);
  return out;
}

void apply_alignment_grad(AlignmentParams& align, AlignmentGrad& grad, double lr,
                          const std::optional<double>& clip) {
  std::vector<Matrix*> p{&align.theta_e, &align.theta_r};
  std::vector<const Matrix*> g{&grad.theta_e, &grad.theta_r};
  sgd_step(p, g, {lr, clip});
}

}  // namespace

AlignStepDiagnostics align_train_step(AlignmentParams& align, const DiscriminatorParams& disc,
                                      const MiEstimatorParams& mi, const AlignmentTables& tables,
                                      const KnowledgeGraph& source_graph, const TrainConfig& config,
                                      Rng& rng) {
  if (source_graph.num_triplets() == 0) throw ArgumentError("source graph has no triplets");
  const auto sources = sample_source_batch(source_graph, config.batch_size, rng);
  auto est = reinforce_gradient(align, disc, tables, sources, config.reward, config.baseline, rng);
  AlignStepDiagnostics diag;
  diag.mean_reward = est.mean_reward;
  if (config.mi_weight > 0.0 && config.mi_update == MiUpdate::Summed) {
    const auto batch = sample_mi_batch(align, tables, config.mi_batch_size, rng);
    diag.mi_estimate = estimate_mi(mi, batch, tables);
    est.grad.theta_e -= config.mi_weight * mi_grad_theta(mi, align, tables, batch);
  }
  apply_alignment_grad(align, est.grad, config.align_lr, config.clip_norm);
  return diag;
}

std::string format_log_row(const TrainLogRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f", row.step, row.disc_loss,
                row.mean_reward, row.mi_estimate, row.valid_hits1, row.valid_mr);
  return buf;
}

TrainingResult run_training(const KnowledgeGraph& source_graph, const KnowledgeGraph& target_graph,
                            const AlignmentSeeds& seeds, const AlignmentSeeds& validation,
                            const AlignmentTables& tables, const TrainConfig& config,
                            const LogSink& sink, const CheckpointSink& on_best) {
  config.validate();
  if (source_graph.num_triplets() == 0) throw ArgumentError("source graph has no triplets");
  if (target_graph.num_triplets() == 0) throw ArgumentError("target graph has no triplets");
  if (tables.source.num_entities() != source_graph.num_entities() ||
      tables.target.num_entities() != target_graph.num_entities() ||
      tables.source.num_relations() != source_graph.num_relations() ||
      tables.target.num_relations() != target_graph.num_relations()) {
    throw ShapeError("embedding tables do not match the graph vocabularies");
  }

  const SeedStreams streams(config.rng_seed);
  Rng init_rng = streams.stream("train.init");
  Rng disc_rng = streams.stream("train.disc");
  Rng align_rng = streams.stream("train.align");
  Rng mi_rng = streams.stream("train.mi");
  const std::uint64_t digest = config_digest(config);

  AlignmentParams align = seeds.entity_pairs.empty()
                              ? noisy_identity_init(tables.source.dim(), tables.target.dim(),
                                                    config.eta, init_rng, config.init_noise)
                              : procrustes_pretrain(seeds, tables, config.eta);
  DiscriminatorParams disc = DiscriminatorParams::init(tables.target.dim(), config.hidden_dim, init_rng);
  MiEstimatorParams mi =
      MiEstimatorParams::init(tables.source.dim(), tables.target.dim(), config.hidden_dim, init_rng);

  auto real_batch = [&](Rng& rng) { return sample_source_batch(target_graph, config.batch_size, rng); };
  const TripletSource random_fake = [&](Rng& rng) { return random_corruption(target_graph, rng); };
  const TripletSource adversarial_fake = [&](Rng& rng) {
    const auto& x = source_graph.triplets()[uniform_index(rng, source_graph.num_triplets())];
    return sample_aligned_triplet(align, tables, x, rng);
  };

  const SgdConfig pre_sgd{config.pretrain_lr, config.clip_norm};
  for (std::size_t i = 0; i < config.disc_pretrain_steps; ++i) {
    const auto real = real_batch(disc_rng);
    const auto fake = make_fake_batch(FakeSourceMode::Random, adversarial_fake, random_fake,
                                      config.batch_size, disc_rng);
    disc_train_step(disc, tables.target, real, fake, pre_sgd);
  }
  for (std::size_t i = 0; i < config.mi_pretrain_steps; ++i) {
    mi_train_step_gamma(mi, sample_mi_batch(align, tables, config.mi_batch_size, mi_rng), tables, pre_sgd);
  }

  const bool has_validation = !validation.entity_pairs.empty();
  TrainingResult result;
  auto validate_now = [&](const Checkpoint& c) {
    return evaluate(c.alignment, tables, validation.entity_pairs);
  };

  result.best = snapshot(align, disc, mi, 0, digest);
  double best_hits = -1.0, best_mr = std::numeric_limits<double>::infinity();
  if (has_validation) {
    const auto r = validate_now(result.best);
    best_hits = r.hits(1);
    best_mr = r.mean_rank;
  }
  if (on_best) on_best(result.best);
  double best_reward = -std::numeric_limits<double>::infinity();
  std::size_t evals_since_best = 0;

  const SgdConfig disc_sgd{config.disc_lr, config.clip_norm};
  const SgdConfig mi_sgd{config.mi_lr, config.clip_norm};
  double disc_loss_acc = 0.0, reward_acc = 0.0, mi_acc = 0.0;
  std::size_t window = 0;

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    try {
      const auto real = real_batch(disc_rng);
      const auto fake = make_fake_batch(config.fake_mode, adversarial_fake, random_fake,
                                        config.batch_size, disc_rng);
      disc_loss_acc += disc_train_step(disc, tables.target, real, fake, disc_sgd);

      const auto diag = align_train_step(align, disc, mi, tables, source_graph, config, align_rng);
      reward_acc += diag.mean_reward;

      const auto mi_batch = sample_mi_batch(align, tables, config.mi_batch_size, mi_rng);
      mi_acc += mi_train_step_gamma(mi, mi_batch, tables, mi_sgd);

      if (config.mi_weight > 0.0 && config.mi_update == MiUpdate::Alternating) {
        const auto batch = sample_mi_batch(align, tables, config.mi_batch_size, mi_rng);
        AlignmentGrad g = AlignmentGrad::zeros_like(align);
        g.theta_e = -config.mi_weight * mi_grad_theta(mi, align, tables, batch);
        apply_alignment_grad(align, g, config.align_lr, config.clip_norm);
      }
    } catch (const NumericError& e) {
      throw NumericError("training step " + std::to_string(step) + ": " + e.what());
    }
    ++window;

    if (step % config.eval_every != 0 && step != config.max_steps) continue;

    TrainLogRow row;
    row.step = step;
    row.disc_loss = disc_loss_acc / static_cast<double>(window);
    row.mean_reward = reward_acc / static_cast<double>(window);
    row.mi_estimate = mi_acc / static_cast<double>(window);
    disc_loss_acc = reward_acc = mi_acc = 0.0;
    window = 0;

    Checkpoint current = snapshot(align, disc, mi, step, digest);
    bool improved = false;
    if (has_validation) {
      const auto r = validate_now(current);
      row.valid_hits1 = r.hits(1);
      row.valid_mr = r.mean_rank;
      if (r.hits(1) > best_hits || (r.hits(1) == best_hits && r.mean_rank < best_mr)) {
        best_hits = r.hits(1);
        best_mr = r.mean_rank;
        result.best = std::move(current);
        improved = true;
        if (on_best) on_best(result.best);
      }
    } else {
      row.valid_hits1 = std::numeric_limits<double>::quiet_NaN();
      row.valid_mr = std::numeric_limits<double>::quiet_NaN();
      if (row.mean_reward > best_reward) {
        best_reward = row.mean_reward;
        improved = true;
      }
      result.best = std::move(current);
      if (on_best) on_best(result.best);
    }
    result.log.push_back(row);
    if (sink) sink(row);

    evals_since_best = improved ? 0 : evals_since_best + 1;
    if (evals_since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace kga

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kga/alignment.hpp"
#include "kga/discriminator.hpp"
#include "kga/graph.hpp"
#include "kga/mutual_info.hpp"

namespace kga {

/// Scalar reward applied to the discriminator score of an aligned triplet.
enum class RewardKind { LogX, LogXOverOneMinusX, XOverOneMinusX, X };

std::string to_string(RewardKind kind);
RewardKind parse_reward_kind(const std::string& name);

/// Throws ArgumentError unless 0 < d < 1.
double reward(RewardKind kind, double d);

enum class Baseline { None, BatchMean };

/// How the MI ascent reaches θ: folded into the adversarial step, or applied
/// as a separate step after the estimator update.
enum class MiUpdate { Summed, Alternating };

struct TrainConfig {
  RewardKind reward = RewardKind::X;
  double mi_weight = 0.1;
  FakeSourceMode fake_mode = FakeSourceMode::Adversarial;
  std::size_t batch_size = 64;
  std::size_t mi_batch_size = 64;
  std::size_t max_steps = 2000;
  double align_lr = 0.001;
  double disc_lr = 0.001;
  double mi_lr = 0.001;
  double pretrain_lr = 0.1;
  std::size_t disc_pretrain_steps = 1000;
  std::size_t mi_pretrain_steps = 1000;
  std::size_t hidden_dim = 2048;
  double eta = 1.0;
  double init_noise = 0.01;
  std::optional<double> clip_norm;
  Baseline baseline = Baseline::BatchMean;
  MiUpdate mi_update = MiUpdate::Summed;
  std::size_t eval_every = 100;
  std::size_t patience = 5;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Stable hash of every field; recorded in checkpoints.
std::uint64_t config_digest(const TrainConfig& config);

struct Checkpoint {
  AlignmentParams alignment;
  DiscriminatorParams discriminator;
  MiEstimatorParams mi_estimator;
  std::uint64_t step = 0;
  std::uint64_t config_digest = 0;
};

/// Rounds all parameters to checkpoint (32-bit float) precision.
Checkpoint snapshot(const AlignmentParams& align, const DiscriminatorParams& disc,
                    const MiEstimatorParams& mi, std::uint64_t step, std::uint64_t digest);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// With `expected_dim`, rejects checkpoints whose embedding dims differ.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::size_t> expected_dim = std::nullopt);

struct ReinforceEstimate {
  AlignmentGrad grad;  // ∇_θ of the reward loss (descent direction)
  double mean_reward = 0.0;
};

/// REINFORCE gradient of -E[R(D(x_t))] over `sources` aligned with `align`.
/// With the batch-mean baseline each sample is centred on the mean reward of
/// the other samples in the batch.
ReinforceEstimate reinforce_gradient(const AlignmentParams& align, const DiscriminatorParams& disc,
                                     const AlignmentTables& tables, std::span<const Triplet> sources,
                                     RewardKind kind, Baseline baseline, Rng& rng);

struct AlignStepDiagnostics {
  double mean_reward = 0.0;
  double mi_estimate = 0.0;
};

/// One SGD step on the reward loss, plus mi_weight times the MI ascent
/// direction when the MI update is summed.
AlignStepDiagnostics align_train_step(AlignmentParams& align, const DiscriminatorParams& disc,
                                      const MiEstimatorParams& mi, const AlignmentTables& tables,
                                      const KnowledgeGraph& source_graph, const TrainConfig& config,
                                      Rng& rng);

struct TrainLogRow {
  std::size_t step = 0;
  double disc_loss = 0.0;
  double mean_reward = 0.0;
  double mi_estimate = 0.0;
  double valid_hits1 = 0.0;
  double valid_mr = 0.0;
};

/// Tab-separated: step, disc_loss, mean_reward, mi_estimate, valid_hits1, valid_mr.
std::string format_log_row(const TrainLogRow& row);

struct TrainingResult {
  Checkpoint best;
  std::vector<TrainLogRow> log;
  bool stopped_early = false;
};

using LogSink = std::function<void(const TrainLogRow&)>;
using CheckpointSink = std::function<void(const Checkpoint&)>;

/// Pre-train (Procrustes or noisy identity, then discriminator and MI
/// estimator), then alternate discriminator, alignment, and MI updates.
/// With validation pairs, keeps the checkpoint with the best validation
/// Hits@1 and stops after `patience` evaluations without improvement;
/// otherwise stops when the mean reward plateaus and returns the last state.
/// `on_best` sees every checkpoint that becomes the returned one.
TrainingResult run_training(const KnowledgeGraph& source_graph, const KnowledgeGraph& target_graph,
                            const AlignmentSeeds& seeds, const AlignmentSeeds& validation,
                            const AlignmentTables& tables, const TrainConfig& config,
                            const LogSink& sink = {}, const CheckpointSink& on_best = {});

}  // namespace kga

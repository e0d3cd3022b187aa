#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "kga/evaluation.hpp"
#include "kga/graph.hpp"
#include "kga/trainer.hpp"
#include "kga_cli/config.hpp"

namespace kga::cli {

struct Dataset {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSeeds seeds;  // empty in unsupervised mode
  std::vector<IndexPair> test;
};

struct SyntheticDataset {
  Dataset data;
  GroundTruthMap truth;
};

/// synthesize_aligned_pair with the synth_* keys, then a seeded split of the
/// entity ground truth into round(seed_fraction · n) seeds and the remaining
/// test pairs (both sorted by source index).
SyntheticDataset synthesize_dataset(const RunConfig& config);

/// Reads the triples, seed, and test files named by the config. In
/// unsupervised mode a seed file is reported on `warn` and ignored.
Dataset load_dataset(const RunConfig& config, std::ostream& warn, bool need_test);

struct EmbeddedPair {
  EmbeddingTable source;
  EmbeddingTable target;
};

EmbeddedPair embed_pair(const Dataset& data, const RunConfig& config);

/// Rejects tables whose kind or dimension disagree with the config.
void check_tables(const EmbeddedPair& tables, const RunConfig& config);

/// Rejects tables whose row counts disagree with the graphs' vocabularies.
void check_vocabulary(const Dataset& data, const EmbeddedPair& tables);

/// Seeds minus a validation_fraction split, and the validation pairs.
std::pair<AlignmentSeeds, AlignmentSeeds> train_validation(const Dataset& data, const RunConfig& config);

struct PipelineResult {
  TrainingResult training;
  Checkpoint initial;  // state after pre-training, before the first adversarial step
  EvalReport initial_report;
  EvalReport report;
  CollapseHistogram histogram;
};

/// Splits off validation pairs (validation_fraction), trains, and evaluates the
/// returned checkpoint on the test pairs.
PipelineResult run_pipeline(const Dataset& data, const EmbeddedPair& tables, const RunConfig& config,
                            const LogSink& sink = {}, const CheckpointSink& on_best = {});

/// Procrustes on the seeds alone, evaluated on the test pairs.
EvalReport procrustes_baseline(const Dataset& data, const EmbeddedPair& tables, const RunConfig& config);

}  // namespace kga::cli

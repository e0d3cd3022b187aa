#include "kga_cli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "kga/error.hpp"

namespace kga::cli {

SyntheticDataset synthesize_dataset(const RunConfig& config) {
  const auto& s = config.synth;
  if (s.seed_fraction < 0.0 || s.seed_fraction > 1.0) {
    throw ConfigError("seed_fraction must lie in [0, 1]");
  }
  auto pair = synthesize_aligned_pair(s.entities, s.relations, s.triplets, s.overlap,
                                      stage_seed(config, "synth"));
  std::vector<IndexPair> all;
  for (const auto& [src, tgt] : pair.truth.entity_map) all.push_back({src, tgt});
  Rng rng = SeedStreams(config.seed).stream("synth.split");
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_seed = static_cast<std::size_t>(std::llround(s.seed_fraction * static_cast<double>(all.size())));

  SyntheticDataset out;
  out.data.seeds.entity_pairs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_seed));
  out.data.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_seed), all.end());
  std::sort(out.data.seeds.entity_pairs.begin(), out.data.seeds.entity_pairs.end());
  std::sort(out.data.test.begin(), out.data.test.end());
  out.data.source = std::move(pair.source);
  out.data.target = std::move(pair.target);
  out.truth = std::move(pair.truth);
  return out;
}

namespace {

void require_path(const std::filesystem::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string("missing required key '") + key + "'");
}

}  // namespace

Dataset load_dataset(const RunConfig& config, std::ostream& warn, bool need_test) {
  require_path(config.source, "source");
  require_path(config.target, "target");
  Dataset data;
  data.source = load_triples(config.source);
  data.target = load_triples(config.target);

  if (config.mode == Supervision::Unsupervised) {
    if (!config.seeds.empty()) {
      warn << "warning: mode is unsupervised; ignoring seed file " << config.seeds << '\n';
    }
  } else {
    if (config.seeds.empty()) {
      throw ConfigError("mode " + to_string(config.mode) + " requires a seed file (key 'seeds')");
    }
    data.seeds = load_seed_pairs(config.seeds, data.source, data.target);
  }
  if (need_test) {
    require_path(config.test, "test");
    data.test = load_seed_pairs(config.test, data.source, data.target).entity_pairs;
  }
  return data;
}

EmbeddedPair embed_pair(const Dataset& data, const RunConfig& config) {
  EmbedConfig ec = config.embed;
  ec.rng_seed = stage_seed(config, "embed.source");
  auto source = train_embeddings(data.source, ec);
  ec.rng_seed = stage_seed(config, "embed.target");
  auto target = train_embeddings(data.target, ec);
  return {std::move(source), std::move(target)};
}

void check_tables(const EmbeddedPair& tables, const RunConfig& config) {
  for (const auto* t : {&tables.source, &tables.target}) {
    if (t->dim() != config.embed.dim) {
      throw ConfigError("embedding dimension " + std::to_string(t->dim()) +
                        " does not match configured dim " + std::to_string(config.embed.dim));
    }
    if (t->kind != config.embed.kind) {
      throw ConfigError("embedding model " + to_string(t->kind) + " does not match configured model " +
                        to_string(config.embed.kind));
    }
  }
}

void check_vocabulary(const Dataset& data, const EmbeddedPair& tables) {
  const auto check = [](const KnowledgeGraph& g, const EmbeddingTable& t, const char* side) {
    if (t.num_entities() != g.num_entities() || t.num_relations() != g.num_relations()) {
      throw VocabularyError(std::string(side) + " embeddings cover " + std::to_string(t.num_entities()) +
                            " entities and " + std::to_string(t.num_relations()) +
                            " relations; the graph has " + std::to_string(g.num_entities()) + " and " +
                            std::to_string(g.num_relations()));
    }
  };
  check(data.source, tables.source, "source");
  check(data.target, tables.target, "target");
}

std::pair<AlignmentSeeds, AlignmentSeeds> train_validation(const Dataset& data, const RunConfig& config) {
  if (config.validation_fraction > 0.0 && !data.seeds.entity_pairs.empty()) {
    return split_pairs(data.seeds, config.validation_fraction, stage_seed(config, "split"));
  }
  return {data.seeds, {}};
}

PipelineResult run_pipeline(const Dataset& data, const EmbeddedPair& tables, const RunConfig& config,
                            const LogSink& sink, const CheckpointSink& on_best) {
  if (data.test.empty()) throw ArgumentError("pipeline needs test pairs");
  const auto [train, validation] = train_validation(data, config);
  TrainConfig tc = config.train;
  tc.rng_seed = stage_seed(config, "train");
  const AlignmentTables view{tables.source, tables.target};

  PipelineResult out;
  bool have_initial = false;
  const CheckpointSink capture = [&](const Checkpoint& c) {
    if (!have_initial) {
      out.initial = c;
      have_initial = true;
    }
    if (on_best) on_best(c);
  };
  out.training = run_training(data.source, data.target, train, validation, view, tc, sink, capture);
  out.initial_report = evaluate(out.initial.alignment, view, data.test);
  out.report = evaluate(out.training.best.alignment, view, data.test);
  std::vector<Index> sources;
  for (const auto& p : data.test) sources.push_back(p.source);
  out.histogram = collapse_histogram(out.training.best.alignment, view, sources, config.top);
  return out;
}

EvalReport procrustes_baseline(const Dataset& data, const EmbeddedPair& tables, const RunConfig& config) {
  if (data.seeds.entity_pairs.empty()) throw ArgumentError("Procrustes baseline needs seed pairs");
  const AlignmentTables view{tables.source, tables.target};
  const auto params = procrustes_pretrain(data.seeds, view, config.train.eta);
  return evaluate(params, view, data.test);
}

}  // namespace kga::cli

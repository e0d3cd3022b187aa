#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kga/graph.hpp"
#include "kga/numeric.hpp"
#include "kga/rng.hpp"

namespace kga {

enum class ModelKind : std::uint8_t { TransE = 0, TransH = 1, DistMult = 2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Per-graph entity and relation vectors. `normals` is only populated for TransH.
struct EmbeddingTable {
  ModelKind kind = ModelKind::TransE;
  Matrix entities;   // |E| × d
  Matrix relations;  // |R| × d
  Matrix normals;    // |R| × d (TransH)

  std::size_t dim() const { return static_cast<std::size_t>(entities.cols()); }
  std::size_t num_entities() const { return static_cast<std::size_t>(entities.rows()); }
  std::size_t num_relations() const { return static_cast<std::size_t>(relations.rows()); }
};

struct EmbedConfig {
  ModelKind kind = ModelKind::TransE;
  std::size_t dim = 128;
  double margin = 1.0;
  std::size_t negatives_per_positive = 1;
  std::size_t epochs = 200;
  std::size_t batch_size = 512;
  double learning_rate = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Higher is more plausible. TransE and TransH return a negated L2 distance,
/// DistMult a trilinear product.
double score_triplet(const EmbeddingTable& table, const Triplet& t);

/// Replaces head or tail (fair coin) by a uniform entity, rejecting corruptions
/// already present in `graph`. Falls back to the other side when one side has
/// no valid corruption; throws SamplingError when neither does.
Triplet negative_sample(const Triplet& t, const KnowledgeGraph& graph, Rng& rng);

/// Random initial table; entity rows (and TransH normals) are unit length.
EmbeddingTable init_embeddings(std::size_t n_entities, std::size_t n_relations,
                               const EmbedConfig& config, Rng& rng);

/// Gradient of the margin loss, same shapes as the table.
struct EmbeddingGrad {
  Matrix entities, relations, normals;
  static EmbeddingGrad zeros_like(const EmbeddingTable& table);
};

struct TrainingPair {
  Triplet positive;
  Triplet negative;
};

/// Σ max(0, margin - score(pos) + score(neg)); accumulates the gradient into
/// `grad` when given.
double margin_loss(const EmbeddingTable& table, std::span<const TrainingPair> pairs, double margin,
                   EmbeddingGrad* grad = nullptr);

/// Mini-batch SGD on the margin ranking loss with filtered negatives.
EmbeddingTable train_embeddings(const KnowledgeGraph& graph, const EmbedConfig& config);

/// Rescales rows to unit length; zero rows are left untouched.
void normalize_rows(Matrix& m);

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace kga

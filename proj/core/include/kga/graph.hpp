#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kga {

using Index = std::uint32_t;

/// Ordered symbol table. Indices follow insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> symbols);

  /// Returns the index of `symbol`, inserting it when the vocabulary is open.
  /// Throws VocabularyError for an unseen symbol once frozen.
  Index intern(std::string_view symbol);
  std::optional<Index> find(std::string_view symbol) const;
  Index at(std::string_view symbol) const;

  const std::string& symbol(Index i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  bool operator==(const Vocabulary& o) const { return symbols_ == o.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Index> lookup_;
  bool frozen_ = false;
};

struct Triplet {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;

  auto operator<=>(const Triplet&) const = default;
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
    h ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

/// Entities, relations, and a duplicate-free list of triplets over them.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  /// Validates indices and drops duplicate triplets, keeping the first copy.
  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triplet> triplets);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_triplets() const { return triplets_.size(); }

  bool contains(const Triplet& t) const { return index_.contains(t); }

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triplet> triplets_;
  std::unordered_set<Triplet, TripletHash> index_;
};

struct IndexPair {
  Index source = 0;
  Index target = 0;
  auto operator<=>(const IndexPair&) const = default;
};

struct AlignmentSeeds {
  std::vector<IndexPair> entity_pairs;
  std::vector<IndexPair> relation_pairs;

  bool empty() const { return entity_pairs.empty() && relation_pairs.empty(); }
};

/// Known source → target correspondences. Partial maps are allowed.
struct GroundTruthMap {
  std::map<Index, Index> entity_map;
  std::map<Index, Index> relation_map;
};

struct FrozenVocabularies {
  Vocabulary entities;
  Vocabulary relations;
};

/// Reads a tab-separated triples file. With `existing`, symbols must already be
/// known and the result uses that vocabulary order.
KnowledgeGraph load_triples(const std::filesystem::path& path,
                            const std::optional<FrozenVocabularies>& existing = std::nullopt);

void write_triples(const KnowledgeGraph& g, const std::filesystem::path& path);

/// Reads "source<TAB>target" entity pairs.
AlignmentSeeds load_seed_pairs(const std::filesystem::path& path, const KnowledgeGraph& src,
                               const KnowledgeGraph& tgt);

void write_seed_pairs(const AlignmentSeeds& seeds, const KnowledgeGraph& src,
                      const KnowledgeGraph& tgt, const std::filesystem::path& path);

/// Drops entity pairs whose source or target never occurs in a triplet of its
/// graph. Exposed for datasets whose test pairs mention unseen entities.
AlignmentSeeds filter_unseen(const AlignmentSeeds& seeds, const KnowledgeGraph& src,
                             const KnowledgeGraph& tgt);

/// Random disjoint split of the entity pairs; relation pairs stay in train.
std::pair<AlignmentSeeds, AlignmentSeeds> split_pairs(const AlignmentSeeds& seeds,
                                                      double validation_fraction,
                                                      std::uint64_t rng_seed);

struct SyntheticPair {
  KnowledgeGraph source;
  KnowledgeGraph target;
  GroundTruthMap truth;
};

/// Builds a source graph and a relabeled target graph sharing
/// round(overlap_fraction * n_triplets) triplets under the returned truth map.
SyntheticPair synthesize_aligned_pair(std::size_t n_entities, std::size_t n_relations,
                                      std::size_t n_triplets, double overlap_fraction,
                                      std::uint64_t rng_seed);

/// Number of source triplets whose image under `truth` is a target triplet.
std::size_t count_shared_triplets(const KnowledgeGraph& src, const KnowledgeGraph& tgt,
                                  const GroundTruthMap& truth);

void write_ground_truth(const GroundTruthMap& truth, const KnowledgeGraph& src,
                        const KnowledgeGraph& tgt, const std::filesystem::path& path);
GroundTruthMap load_ground_truth(const std::filesystem::path& path, const KnowledgeGraph& src,
                                 const KnowledgeGraph& tgt);

struct GraphStats {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t triplets = 0;
  /// degree → number of entities with that degree (head and tail occurrences).
  std::map<std::size_t, std::size_t> degree_histogram;
};

GraphStats graph_stats(const KnowledgeGraph& g);

}  // namespace kga

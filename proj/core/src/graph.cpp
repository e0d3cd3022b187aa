#include "kga/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "kga/error.hpp"
#include "kga/rng.hpp"

namespace kga {

constexpr std::string_view kRelationSection = "== relations ==";

Vocabulary::Vocabulary(std::vector<std::string> symbols) {
  for (auto& s : symbols) {
    if (lookup_.contains(s)) throw VocabularyError("duplicate symbol '" + s + "'");
    lookup_.emplace(s, static_cast<Index>(symbols_.size()));
    symbols_.push_back(std::move(s));
  }
}

Index Vocabulary::intern(std::string_view symbol) {
  std::string key(symbol);
  if (auto it = lookup_.find(key); it != lookup_.end()) return it->second;
  if (frozen_) throw VocabularyError("unknown symbol '" + key + "'");
  const auto idx = static_cast<Index>(symbols_.size());
  lookup_.emplace(key, idx);
  symbols_.push_back(std::move(key));
  return idx;
}

std::optional<Index> Vocabulary::find(std::string_view symbol) const {
  auto it = lookup_.find(std::string(symbol));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Index Vocabulary::at(std::string_view symbol) const {
  if (auto i = find(symbol)) return *i;
  throw VocabularyError("unknown symbol '" + std::string(symbol) + "'");
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations,
                               std::vector<Triplet> triplets)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
  entities_.freeze();
  relations_.freeze();
  triplets_.reserve(triplets.size());
  index_.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (t.head >= entities_.size() || t.tail >= entities_.size() ||
        t.relation >= relations_.size()) {
      throw IndexError("triplet index out of range");
    }
    if (index_.insert(t).second) triplets_.push_back(t);
  }
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

}  // namespace

KnowledgeGraph load_triples(const std::filesystem::path& path,
                            const std::optional<FrozenVocabularies>& existing) {
  auto in = open_input(path);
  Vocabulary entities = existing ? existing->entities : Vocabulary{};
  Vocabulary relations = existing ? existing->relations : Vocabulary{};
  if (existing) {
    entities.freeze();
    relations.freeze();
  }
  std::vector<Triplet> triplets;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (skip_line(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path.string(), lineno,
                       "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    try {
      Triplet t;
      t.head = entities.intern(fields[0]);
      t.relation = relations.intern(fields[1]);
      t.tail = entities.intern(fields[2]);
      triplets.push_back(t);
    } catch (const VocabularyError& e) {
      throw VocabularyError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triplets));
}

void write_triples(const KnowledgeGraph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& t : g.triplets()) {
    out << g.entities().symbol(t.head) << '\t' << g.relations().symbol(t.relation) << '\t'
        << g.entities().symbol(t.tail) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

// Shared reader for the two-column pair formats. Pairs after a
// "== relations ==" line are relation pairs.
struct SymbolPairs {
  std::vector<std::pair<std::string, std::string>> entities;
  std::vector<std::pair<std::string, std::string>> relations;
  std::vector<std::size_t> entity_lines, relation_lines;
};

SymbolPairs read_symbol_pairs(const std::filesystem::path& path) {
  auto in = open_input(path);
  SymbolPairs out;
  bool relation_section = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line == kRelationSection) {
      relation_section = true;
      continue;
    }
    if (skip_line(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw ParseError(path.string(), lineno,
                       "expected 2 tab-separated fields, found " + std::to_string(fields.size()));
    }
    auto& dst = relation_section ? out.relations : out.entities;
    auto& lines = relation_section ? out.relation_lines : out.entity_lines;
    dst.emplace_back(std::string(fields[0]), std::string(fields[1]));
    lines.push_back(lineno);
  }
  return out;
}

std::vector<IndexPair> intern_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                                    const std::vector<std::size_t>& lines, const Vocabulary& src,
                                    const Vocabulary& tgt, const std::filesystem::path& path,
                                    const char* kind) {
  std::vector<IndexPair> out;
  std::unordered_map<Index, Index> seen;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto where = path.string() + ":" + std::to_string(lines[i]) + ": ";
    const auto s = src.find(pairs[i].first);
    const auto t = tgt.find(pairs[i].second);
    if (!s) throw VocabularyError(where + "unknown source " + kind + " '" + pairs[i].first + "'");
    if (!t) throw VocabularyError(where + "unknown target " + kind + " '" + pairs[i].second + "'");
    if (auto it = seen.find(*s); it != seen.end()) {
      if (it->second != *t) {
        throw ConflictError(where + "source " + kind + " '" + pairs[i].first +
                            "' is paired with two different targets");
      }
      continue;
    }
    seen.emplace(*s, *t);
    out.push_back({*s, *t});
  }
  return out;
}

}  // namespace

AlignmentSeeds load_seed_pairs(const std::filesystem::path& path, const KnowledgeGraph& src,
                               const KnowledgeGraph& tgt) {
  const auto raw = read_symbol_pairs(path);
  AlignmentSeeds seeds;
  seeds.entity_pairs =
      intern_pairs(raw.entities, raw.entity_lines, src.entities(), tgt.entities(), path, "entity");
  seeds.relation_pairs = intern_pairs(raw.relations, raw.relation_lines, src.relations(),
                                      tgt.relations(), path, "relation");
  return seeds;
}

void write_seed_pairs(const AlignmentSeeds& seeds, const KnowledgeGraph& src,
                      const KnowledgeGraph& tgt, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& p : seeds.entity_pairs) {
    out << src.entities().symbol(p.source) << '\t' << tgt.entities().symbol(p.target) << '\n';
  }
  if (!seeds.relation_pairs.empty()) {
    out << kRelationSection << '\n';
    for (const auto& p : seeds.relation_pairs) {
      out << src.relations().symbol(p.source) << '\t' << tgt.relations().symbol(p.target) << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

AlignmentSeeds filter_unseen(const AlignmentSeeds& seeds, const KnowledgeGraph& src,
                             const KnowledgeGraph& tgt) {
  auto used = [](const KnowledgeGraph& g) {
    std::vector<bool> u(g.num_entities(), false);
    for (const auto& t : g.triplets()) u[t.head] = u[t.tail] = true;
    return u;
  };
  const auto su = used(src);
  const auto tu = used(tgt);
  AlignmentSeeds out;
  out.relation_pairs = seeds.relation_pairs;
  for (const auto& p : seeds.entity_pairs) {
    if (su.at(p.source) && tu.at(p.target)) out.entity_pairs.push_back(p);
  }
  return out;
}

std::pair<AlignmentSeeds, AlignmentSeeds> split_pairs(const AlignmentSeeds& seeds,
                                                      double validation_fraction,
                                                      std::uint64_t rng_seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ArgumentError("validation fraction must lie in [0, 1)");
  }
  if (seeds.entity_pairs.empty()) throw ArgumentError("cannot split an empty seed set");
  const std::size_t n = seeds.entity_pairs.size();
  const auto n_valid = static_cast<std::size_t>(std::llround(validation_fraction * n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(rng_seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_valid(n, false);
  for (std::size_t i = 0; i < n_valid; ++i) is_valid[order[i]] = true;

  AlignmentSeeds train, valid;
  train.relation_pairs = seeds.relation_pairs;
  for (std::size_t i = 0; i < n; ++i) {
    (is_valid[i] ? valid : train).entity_pairs.push_back(seeds.entity_pairs[i]);
  }
  return {std::move(train), std::move(valid)};
}

namespace {

struct SymbolTriplet {
  std::string head, relation, tail;
};

// Interns symbols in first-occurrence order, so that writing the graph and
// reading it back reproduces the same indices.
KnowledgeGraph intern_graph(const std::vector<SymbolTriplet>& symbolic) {
  Vocabulary entities, relations;
  std::vector<Triplet> triplets;
  triplets.reserve(symbolic.size());
  for (const auto& s : symbolic) {
    Triplet t;
    t.head = entities.intern(s.head);
    t.relation = relations.intern(s.relation);
    t.tail = entities.intern(s.tail);
    triplets.push_back(t);
  }
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triplets));
}

std::string name(char prefix, std::size_t i) { return prefix + std::to_string(i); }

}  // namespace

SyntheticPair synthesize_aligned_pair(std::size_t n_entities, std::size_t n_relations,
                                      std::size_t n_triplets, double overlap_fraction,
                                      std::uint64_t rng_seed) {
  if (n_entities == 0 || n_relations == 0) throw ArgumentError("need at least one entity and relation");
  if (!(overlap_fraction > 0.0 && overlap_fraction <= 1.0)) {
    throw ArgumentError("overlap fraction must lie in (0, 1]");
  }
  const double capacity = static_cast<double>(n_entities) * n_entities * n_relations;
  if (static_cast<double>(n_triplets) > capacity) {
    throw ArgumentError("more triplets requested than distinct triplets exist");
  }
  const auto n_shared = static_cast<std::size_t>(std::llround(overlap_fraction * n_triplets));
  // Fresh target triplets must avoid every image of a source triplet.
  if (static_cast<double>(2 * n_triplets - n_shared) > capacity) {
    throw ArgumentError("not enough distinct triplets for the requested overlap");
  }

  SeedStreams streams(rng_seed);
  Rng rng = streams.stream("synth");
  auto random_triplet = [&]() {
    return Triplet{static_cast<Index>(uniform_index(rng, n_entities)),
                   static_cast<Index>(uniform_index(rng, n_relations)),
                   static_cast<Index>(uniform_index(rng, n_entities))};
  };

  // Source: a covering prefix so every entity and relation occurs, then random.
  std::set<Triplet> src_set;
  std::vector<Triplet> src;
  {
    std::vector<Index> ents(n_entities), rels(n_relations);
    std::iota(ents.begin(), ents.end(), 0);
    std::iota(rels.begin(), rels.end(), 0);
    std::shuffle(ents.begin(), ents.end(), rng);
    std::shuffle(rels.begin(), rels.end(), rng);
    const std::size_t cover = std::max((n_entities + 1) / 2, n_relations);
    for (std::size_t k = 0; k < cover && src.size() < n_triplets; ++k) {
      Triplet t{ents[(2 * k) % n_entities], rels[k % n_relations], ents[(2 * k + 1) % n_entities]};
      if (src_set.insert(t).second) src.push_back(t);
    }
    while (src.size() < n_triplets) {
      const auto t = random_triplet();
      if (src_set.insert(t).second) src.push_back(t);
    }
  }

  std::vector<Index> ent_perm(n_entities), rel_perm(n_relations);
  std::iota(ent_perm.begin(), ent_perm.end(), 0);
  std::iota(rel_perm.begin(), rel_perm.end(), 0);
  std::shuffle(ent_perm.begin(), ent_perm.end(), rng);
  std::shuffle(rel_perm.begin(), rel_perm.end(), rng);
  auto image = [&](const Triplet& t) {
    return Triplet{ent_perm[t.head], rel_perm[t.relation], ent_perm[t.tail]};
  };

  std::vector<std::size_t> order(src.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::set<Triplet> src_images;
  for (const auto& t : src) src_images.insert(image(t));
  std::set<Triplet> tgt_set;
  std::vector<Triplet> tgt;
  std::vector<bool> ent_seen(n_entities, false), rel_seen(n_relations, false);
  auto add_target = [&](const Triplet& t) {
    tgt_set.insert(t);
    tgt.push_back(t);
    ent_seen[t.head] = ent_seen[t.tail] = true;
    rel_seen[t.relation] = true;
  };
  for (std::size_t i = 0; i < n_shared; ++i) add_target(image(src[order[i]]));

  // Fresh target triplets: first reach entities and relations the shared part
  // missed, then uniform.
  std::vector<Index> missing_ents, missing_rels;
  for (Index e = 0; e < n_entities; ++e) if (!ent_seen[e]) missing_ents.push_back(e);
  for (Index r = 0; r < n_relations; ++r) if (!rel_seen[r]) missing_rels.push_back(r);
  std::size_t attempts = 0;
  while (tgt.size() < n_triplets) {
    Triplet t = random_triplet();
    if (!missing_ents.empty() && attempts < 64 * n_triplets) t.head = missing_ents.back();
    if (!missing_rels.empty() && attempts < 64 * n_triplets) t.relation = missing_rels.back();
    ++attempts;
    if (src_images.contains(t) || tgt_set.contains(t)) continue;
    add_target(t);
    while (!missing_ents.empty() && ent_seen[missing_ents.back()]) missing_ents.pop_back();
    while (!missing_rels.empty() && rel_seen[missing_rels.back()]) missing_rels.pop_back();
  }
  std::shuffle(tgt.begin(), tgt.end(), rng);

  std::vector<SymbolTriplet> src_sym, tgt_sym;
  for (const auto& t : src) src_sym.push_back({name('e', t.head), name('r', t.relation), name('e', t.tail)});
  for (const auto& t : tgt) tgt_sym.push_back({name('E', t.head), name('R', t.relation), name('E', t.tail)});

  SyntheticPair out{intern_graph(src_sym), intern_graph(tgt_sym), {}};
  for (Index e = 0; e < n_entities; ++e) {
    const auto s = out.source.entities().find(name('e', e));
    const auto t = out.target.entities().find(name('E', ent_perm[e]));
    if (s && t) out.truth.entity_map.emplace(*s, *t);
  }
  for (Index r = 0; r < n_relations; ++r) {
    const auto s = out.source.relations().find(name('r', r));
    const auto t = out.target.relations().find(name('R', rel_perm[r]));
    if (s && t) out.truth.relation_map.emplace(*s, *t);
  }
  return out;
}

std::size_t count_shared_triplets(const KnowledgeGraph& src, const KnowledgeGraph& tgt,
                                  const GroundTruthMap& truth) {
  std::size_t shared = 0;
  for (const auto& t : src.triplets()) {
    const auto h = truth.entity_map.find(t.head);
    const auto r = truth.relation_map.find(t.relation);
    const auto tl = truth.entity_map.find(t.tail);
    if (h == truth.entity_map.end() || r == truth.relation_map.end() ||
        tl == truth.entity_map.end()) {
      continue;
    }
    if (tgt.contains({h->second, r->second, tl->second})) ++shared;
  }
  return shared;
}

void write_ground_truth(const GroundTruthMap& truth, const KnowledgeGraph& src,
                        const KnowledgeGraph& tgt, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [s, t] : truth.entity_map) {
    out << src.entities().symbol(s) << '\t' << tgt.entities().symbol(t) << '\n';
  }
  out << kRelationSection << '\n';
  for (const auto& [s, t] : truth.relation_map) {
    out << src.relations().symbol(s) << '\t' << tgt.relations().symbol(t) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

GroundTruthMap load_ground_truth(const std::filesystem::path& path, const KnowledgeGraph& src,
                                 const KnowledgeGraph& tgt) {
  const auto seeds = load_seed_pairs(path, src, tgt);
  GroundTruthMap truth;
  auto fill = [&path](const std::vector<IndexPair>& pairs, std::map<Index, Index>& dst) {
    std::set<Index> targets;
    for (const auto& p : pairs) {
      if (!targets.insert(p.target).second) {
        throw ConflictError(path.string() + ": ground truth is not injective");
      }
      dst.emplace(p.source, p.target);
    }
  };
  fill(seeds.entity_pairs, truth.entity_map);
  fill(seeds.relation_pairs, truth.relation_map);
  return truth;
}

GraphStats graph_stats(const KnowledgeGraph& g) {
  GraphStats s;
  s.entities = g.num_entities();
  s.relations = g.num_relations();
  s.triplets = g.num_triplets();
  std::vector<std::size_t> degree(g.num_entities(), 0);
  for (const auto& t : g.triplets()) {
    ++degree[t.head];
    ++degree[t.tail];
  }
  for (auto d : degree) ++s.degree_histogram[d];
  return s;
}

}  // namespace kga

#include <doctest.h>

#include <fstream>
#include <set>

#include "kga/error.hpp"
#include "kga/graph.hpp"
#include "support.hpp"

using namespace kga;

namespace {

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

Triplet image(const Triplet& t, const GroundTruthMap& truth) {
  return {truth.entity_map.at(t.head), truth.relation_map.at(t.relation), truth.entity_map.at(t.tail)};
}

}  // namespace

TEST_SUITE("kg-data") {
  TEST_CASE("vocabulary interns in insertion order and rejects unseen symbols once frozen") {
    Vocabulary v;
    CHECK(v.intern("b") == 0);
    CHECK(v.intern("a") == 1);
    CHECK(v.intern("b") == 0);
    v.freeze();
    CHECK(v.at("a") == 1);
    CHECK_THROWS_AS(v.intern("c"), VocabularyError);
    CHECK_FALSE(v.find("c").has_value());
  }

  TEST_CASE("two-line triples file gives 3 entities, 1 relation, 2 triplets") {
    const auto dir = test::scratch_dir("graph_small");
    const auto g = load_triples(write_file(dir, "t.tsv", "a\tr1\tb\nb\tr1\tc\n"));
    CHECK(g.num_entities() == 3);
    CHECK(g.num_relations() == 1);
    CHECK(g.num_triplets() == 2);
    CHECK(g.contains({0, 0, 1}));
    CHECK(g.contains({1, 0, 2}));
  }

  TEST_CASE("duplicate lines collapse to one triplet") {
    const auto dir = test::scratch_dir("graph_dup");
    const auto g = load_triples(write_file(dir, "t.tsv", "a\tr\tb\na\tr\tb\n"));
    CHECK(g.num_triplets() == 1);
  }

  TEST_CASE("malformed line reports its line number") {
    const auto dir = test::scratch_dir("graph_bad");
    const auto p = write_file(dir, "t.tsv", "# comment\na\tr\tb\na\tr\n");
    try {
      load_triples(p);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find(p.string()) != std::string::npos);
    }
  }

  TEST_CASE("missing triples file is a data error naming the path") {
    try {
      load_triples("/nonexistent/kga/triples.tsv");
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/kga/triples.tsv") != std::string::npos);
    }
  }

  TEST_CASE("triples round-trip through write and load") {
    const auto dir = test::scratch_dir("graph_rt");
    const auto pair = synthesize_aligned_pair(30, 4, 120, 0.8, 3);
    write_triples(pair.source, dir / "s.tsv");
    const auto back = load_triples(dir / "s.tsv");
    CHECK(back.entities() == pair.source.entities());
    CHECK(back.relations() == pair.source.relations());
    CHECK(back.triplets() == pair.source.triplets());
  }

  TEST_CASE("seed pairs: empty file, dedup, conflicts, unknown symbols") {
    const auto dir = test::scratch_dir("graph_seeds");
    const auto src = load_triples(write_file(dir, "s.tsv", "a\tr\tb\nb\tr\tc\n"));
    const auto tgt = load_triples(write_file(dir, "t.tsv", "A\tR\tB\nB\tR\tC\n"));

    CHECK(load_seed_pairs(write_file(dir, "empty.tsv", ""), src, tgt).empty());

    const auto dup = load_seed_pairs(write_file(dir, "dup.tsv", "a\tA\na\tA\n"), src, tgt);
    REQUIRE(dup.entity_pairs.size() == 1);
    CHECK(dup.entity_pairs[0] == IndexPair{0, 0});

    CHECK_THROWS_AS(load_seed_pairs(write_file(dir, "conf.tsv", "a\tA\na\tB\n"), src, tgt), ConflictError);
    CHECK_THROWS_AS(load_seed_pairs(write_file(dir, "unk.tsv", "z\tA\n"), src, tgt), VocabularyError);

    const auto with_rel =
        load_seed_pairs(write_file(dir, "rel.tsv", "a\tA\nc\tC\n== relations ==\nr\tR\n"), src, tgt);
    CHECK(with_rel.entity_pairs.size() == 2);
    REQUIRE(with_rel.relation_pairs.size() == 1);
    CHECK(with_rel.relation_pairs[0] == IndexPair{0, 0});

    write_seed_pairs(with_rel, src, tgt, dir / "back.tsv");
    const auto back = load_seed_pairs(dir / "back.tsv", src, tgt);
    CHECK(back.entity_pairs == with_rel.entity_pairs);
    CHECK(back.relation_pairs == with_rel.relation_pairs);
  }

  TEST_CASE("split_pairs sizes, boundary, determinism, disjointness") {
    AlignmentSeeds seeds;
    for (Index i = 0; i < 5000; ++i) seeds.entity_pairs.push_back({i, (i * 7) % 5000});
    seeds.relation_pairs.push_back({0, 1});

    const auto [train, valid] = split_pairs(seeds, 0.1, 11);
    CHECK(train.entity_pairs.size() == 4500);
    CHECK(valid.entity_pairs.size() == 500);
    CHECK(train.relation_pairs.size() == 1);
    std::set<IndexPair> all(train.entity_pairs.begin(), train.entity_pairs.end());
    for (const auto& p : valid.entity_pairs) CHECK(all.insert(p).second);
    CHECK(all.size() == 5000);

    const auto [train2, valid2] = split_pairs(seeds, 0.1, 11);
    CHECK(train2.entity_pairs == train.entity_pairs);
    CHECK(valid2.entity_pairs == valid.entity_pairs);

    const auto [all_train, none] = split_pairs(seeds, 0.0, 11);
    CHECK(all_train.entity_pairs.size() == 5000);
    CHECK(none.entity_pairs.empty());

    CHECK_THROWS_AS(split_pairs(seeds, 1.0, 11), ArgumentError);
    CHECK_THROWS_AS(split_pairs(AlignmentSeeds{}, 0.1, 11), ArgumentError);
  }

  TEST_CASE("synthetic pair shares exactly round(overlap * n) triplets") {
    const auto pair = synthesize_aligned_pair(200, 20, 3000, 0.5, 7);
    CHECK(pair.source.num_entities() == 200);
    CHECK(pair.source.num_relations() == 20);
    CHECK(pair.source.num_triplets() == 3000);
    CHECK(pair.target.num_triplets() == 3000);
    // Recount directly rather than through count_shared_triplets.
    std::size_t shared = 0;
    for (const auto& t : pair.source.triplets()) shared += pair.target.contains(image(t, pair.truth));
    CHECK(shared == 1500);
    CHECK(count_shared_triplets(pair.source, pair.target, pair.truth) == 1500);

    std::set<Index> images;
    for (const auto& [s, t] : pair.truth.entity_map) images.insert(t);
    CHECK(pair.truth.entity_map.size() == 200);
    CHECK(images.size() == 200);
  }

  TEST_CASE("overlap 1 gives an exact relabeled copy") {
    const auto pair = synthesize_aligned_pair(50, 5, 400, 1.0, 2);
    REQUIRE(pair.target.num_triplets() == pair.source.num_triplets());
    for (const auto& t : pair.source.triplets()) CHECK(pair.target.contains(image(t, pair.truth)));
  }

  TEST_CASE("synthesis is deterministic in its seed") {
    const auto a = synthesize_aligned_pair(40, 4, 200, 0.7, 5);
    const auto b = synthesize_aligned_pair(40, 4, 200, 0.7, 5);
    const auto c = synthesize_aligned_pair(40, 4, 200, 0.7, 6);
    CHECK(a.source.triplets() == b.source.triplets());
    CHECK(a.target.triplets() == b.target.triplets());
    CHECK(a.truth.entity_map == b.truth.entity_map);
    CHECK(a.source.triplets() != c.source.triplets());
  }

  TEST_CASE("ground truth round-trips") {
    const auto dir = test::scratch_dir("graph_truth");
    const auto pair = synthesize_aligned_pair(30, 3, 100, 0.9, 1);
    write_ground_truth(pair.truth, pair.source, pair.target, dir / "truth.tsv");
    const auto back = load_ground_truth(dir / "truth.tsv", pair.source, pair.target);
    CHECK(back.entity_map == pair.truth.entity_map);
    CHECK(back.relation_map == pair.truth.relation_map);
  }

  TEST_CASE("graph_stats: empty graph and requested counts") {
    const auto empty = graph_stats(KnowledgeGraph{});
    CHECK(empty.entities == 0);
    CHECK(empty.relations == 0);
    CHECK(empty.triplets == 0);
    CHECK(empty.degree_histogram.empty());

    const auto pair = synthesize_aligned_pair(200, 20, 3000, 0.9, 7);
    const auto s = graph_stats(pair.source);
    CHECK(s.entities == 200);
    CHECK(s.relations == 20);
    CHECK(s.triplets == 3000);
    std::size_t degree_sum = 0, counted = 0;
    for (const auto& [deg, n] : s.degree_histogram) {
      degree_sum += deg * n;
      counted += n;
    }
    CHECK(counted == 200);
    CHECK(degree_sum == 2 * 3000);
  }

  TEST_CASE("filter_unseen drops pairs naming entities without triplets") {
    Vocabulary se({"a", "b", "lonely"});
    Vocabulary te({"A", "B"});
    Vocabulary r({"r"});
    const KnowledgeGraph src(se, r, {{0, 0, 1}});
    const KnowledgeGraph tgt(te, r, {{0, 0, 1}});
    AlignmentSeeds seeds;
    seeds.entity_pairs = {{0, 0}, {2, 1}};
    const auto kept = filter_unseen(seeds, src, tgt);
    REQUIRE(kept.entity_pairs.size() == 1);
    CHECK(kept.entity_pairs[0] == IndexPair{0, 0});
  }
}

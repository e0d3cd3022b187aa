#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

#include "kga/checkpoint_io.hpp"
#include "kga/embedding.hpp"
#include "kga/error.hpp"
#include "support.hpp"

using namespace kga;

namespace {

double transe_oracle(const EmbeddingTable& t, const Triplet& x) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < t.entities.cols(); ++k) {
    const double d = t.entities(x.head, k) + t.relations(x.relation, k) - t.entities(x.tail, k);
    s += d * d;
  }
  return -std::sqrt(s);
}

std::vector<TrainingPair> random_pairs(const KnowledgeGraph& g, std::size_t n, Rng& rng) {
  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pos = g.triplets()[uniform_index(rng, g.num_triplets())];
    out.push_back({pos, negative_sample(pos, g, rng)});
  }
  return out;
}

}  // namespace

TEST_SUITE("kg-embedding") {
  TEST_CASE("TransE: exact translation scores 0, the maximum") {
    Rng rng(1);
    auto t = test::random_table(3, 1, 4, rng);
    t.entities.row(2) = t.entities.row(0) + t.relations.row(0);
    CHECK(score_triplet(t, {0, 0, 2}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(score_triplet(t, {0, 0, 1}) < 0.0);
    CHECK(score_triplet(t, {0, 0, 1}) == doctest::Approx(transe_oracle(t, {0, 0, 1})).epsilon(1e-12));
  }

  TEST_CASE("DistMult: a zero relation scores 0") {
    Rng rng(2);
    auto t = test::random_table(3, 2, 5, rng, ModelKind::DistMult);
    t.relations.row(1).setZero();
    CHECK(score_triplet(t, {0, 1, 2}) == 0.0);
    const double oracle = (t.entities.row(0).array() * t.relations.row(0).array() * t.entities.row(2).array()).sum();
    CHECK(score_triplet(t, {0, 0, 2}) == doctest::Approx(oracle).epsilon(1e-12));
  }

  TEST_CASE("TransH with a normal orthogonal to every vector reduces to TransE") {
    Rng rng(3);
    auto h = test::random_table(4, 2, 6, rng, ModelKind::TransH);
    // Zero the last coordinate everywhere and put the normal there.
    h.entities.col(5).setZero();
    h.relations.col(5).setZero();
    h.normals.setZero();
    h.normals.col(5).setOnes();
    auto e = h;
    e.kind = ModelKind::TransE;
    for (Index a = 0; a < 4; ++a) {
      for (Index b = 0; b < 4; ++b) {
        CHECK(score_triplet(h, {a, 1, b}) == doctest::Approx(score_triplet(e, {a, 1, b})).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("negative sampling is filtered and deterministic") {
    const auto pair = synthesize_aligned_pair(30, 3, 200, 0.9, 4);
    const auto& g = pair.source;
    Rng a(5);
    for (int i = 0; i < 10000; ++i) {
      const auto& pos = g.triplets()[uniform_index(a, g.num_triplets())];
      const auto neg = negative_sample(pos, g, a);
      CHECK_FALSE(g.contains(neg));
      CHECK(neg.relation == pos.relation);
      CHECK((neg.head == pos.head || neg.tail == pos.tail));
    }
    Rng c(9), d(9);
    const auto& pos = g.triplets()[0];
    for (int i = 0; i < 50; ++i) CHECK(negative_sample(pos, g, c) == negative_sample(pos, g, d));
  }

  TEST_CASE("negative sampling on an exhausted side falls back or fails") {
    // Both heads already appear with (r, y): only tail corruption can succeed.
    Vocabulary e({"x", "y"});
    Vocabulary r({"r"});
    const KnowledgeGraph g(e, r, {{0, 0, 1}, {1, 0, 1}});
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
      const auto neg = negative_sample({0, 0, 1}, g, rng);
      CHECK(neg == Triplet{0, 0, 0});
    }
    const KnowledgeGraph full(e, r, {{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}});
    CHECK_THROWS_AS(negative_sample({0, 0, 1}, full, rng), SamplingError);
  }

  TEST_CASE("margin loss gradient matches central differences for every model") {
    const auto pair = synthesize_aligned_pair(12, 3, 40, 0.9, 7);
    Rng rng(8);
    for (auto kind : {ModelKind::TransE, ModelKind::TransH, ModelKind::DistMult}) {
      for (int trial = 0; trial < 5; ++trial) {
        auto table = test::random_table(12, 3, 5, rng, kind);
        const auto pairs = random_pairs(pair.source, 8, rng);
        const double margin = 2.0;  // keeps most hinges active
        auto grad = EmbeddingGrad::zeros_like(table);
        margin_loss(table, pairs, margin, &grad);
        auto loss = [&] { return margin_loss(table, pairs, margin); };
        std::vector<Matrix*> ps{&table.entities, &table.relations};
        std::vector<const Matrix*> gs{&grad.entities, &grad.relations};
        if (kind == ModelKind::TransH) {
          ps.push_back(&table.normals);
          gs.push_back(&grad.normals);
        }
        CHECK(finite_diff_check(loss, ps, gs, 1e-6) <= 1e-5);
      }
    }
  }

  TEST_CASE("zero epochs returns the initialization") {
    const auto pair = synthesize_aligned_pair(20, 2, 60, 0.9, 1);
    EmbedConfig c;
    c.dim = 8;
    c.epochs = 0;
    c.rng_seed = 3;
    const auto t = train_embeddings(pair.source, c);
    Rng rng = SeedStreams(3).stream("embed.init");
    const auto init = init_embeddings(20, 2, c, rng);
    CHECK(t.entities == init.entities);
    CHECK(t.relations == init.relations);
  }

  TEST_CASE("training is deterministic and separates true triplets from corruptions") {
    const auto pair = synthesize_aligned_pair(50, 5, 400, 0.9, 2);
    EmbedConfig c;
    c.dim = 16;
    c.epochs = 100;
    c.batch_size = 64;
    c.rng_seed = 4;
    const auto a = train_embeddings(pair.source, c);
    const auto b = train_embeddings(pair.source, c);
    CHECK(a.entities == b.entities);

    Rng rng(5);
    double pos = 0.0, neg = 0.0;
    for (const auto& t : pair.source.triplets()) {
      pos += score_triplet(a, t);
      neg += score_triplet(a, negative_sample(t, pair.source, rng));
    }
    CHECK(pos > neg);
  }

  TEST_CASE("TransE link prediction beats the random baseline by 5x") {
    // Entities on a line, relation r links i to i + r + 1: held-out triplets
    // follow from the rest, unlike a uniformly random graph.
    std::vector<std::string> names;
    for (int i = 0; i < 200; ++i) names.push_back("e" + std::to_string(i));
    std::vector<std::string> rel_names;
    for (int r = 0; r < 20; ++r) rel_names.push_back("r" + std::to_string(r));
    std::vector<Triplet> all;
    for (Index h = 0; h < 200; ++h) {
      for (Index r = 0; r < 20; ++r) {
        if (h + r + 1 < 200) all.push_back({h, r, h + r + 1});
      }
    }
    Rng rng(6);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(3000);
    const std::size_t n_test = all.size() / 10;
    const std::vector<Triplet> test(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
    const std::vector<Triplet> train(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
    const KnowledgeGraph g(Vocabulary(names), Vocabulary(rel_names), train);

    EmbedConfig c;
    c.dim = 32;
    c.epochs = 100;
    c.margin = 1.0;
    c.rng_seed = 1;
    const auto table = train_embeddings(g, c);
    std::size_t hits = 0;
    for (const auto& t : test) {
      const double key = score_triplet(table, t);
      std::size_t rank = 1;
      for (Index e = 0; e < g.num_entities(); ++e) {
        if (e != t.tail && score_triplet(table, {t.head, t.relation, e}) > key) ++rank;
      }
      hits += rank <= 10;
    }
    const double hits10 = static_cast<double>(hits) / static_cast<double>(test.size());
    CHECK(hits10 >= 5.0 * 10.0 / 200.0);
  }

  TEST_CASE("embedding checkpoints round-trip and record the model kind") {
    const auto dir = test::scratch_dir("embed_ckpt");
    Rng rng(7);
    for (auto kind : {ModelKind::TransE, ModelKind::TransH, ModelKind::DistMult}) {
      auto t = test::random_table(6, 2, 4, rng, kind);
      for (auto* m : {&t.entities, &t.relations, &t.normals}) round_to_float(*m);
      const auto path = dir / (to_string(kind) + ".emb");
      save_embeddings(t, path);
      const auto back = load_embeddings(path);
      CHECK(back.kind == kind);
      CHECK(back.entities == t.entities);
      CHECK(back.relations == t.relations);
      CHECK(back.normals == t.normals);

      std::ifstream in(path, std::ios::binary);
      const std::string bytes((std::istreambuf_iterator<char>(in)), {});
      REQUIRE(bytes.size() > 6);
      CHECK(static_cast<std::uint8_t>(bytes[6]) == static_cast<std::uint8_t>(kind));
    }
  }

  TEST_CASE("model names parse") {
    CHECK(parse_model_kind("distmult") == ModelKind::DistMult);
    CHECK(parse_model_kind("transh") == ModelKind::TransH);
    CHECK_THROWS_AS(parse_model_kind("rotate"), ArgumentError);
  }
}

#include <benchmark/benchmark.h>

#include "kga/alignment.hpp"
#include "kga/discriminator.hpp"
#include "kga/embedding.hpp"
#include "kga/evaluation.hpp"
#include "kga/mutual_info.hpp"

using namespace kga;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -1.0, 1.0);
  return m;
}

EmbeddingTable random_table(Index ne, Index nr, Eigen::Index dim, Rng& rng) {
  EmbeddingTable t;
  t.entities = random_matrix(ne, dim, rng);
  t.relations = random_matrix(nr, dim, rng);
  return t;
}

// Benchmark-shaped tables: 200 entities, 20 relations.
struct Fixture {
  Rng rng{1};
  EmbeddingTable src, tgt;
  AlignmentParams align;

  explicit Fixture(Eigen::Index dim)
      : src(random_table(200, 20, dim, rng)),
        tgt(random_table(200, 20, dim, rng)),
        align{Matrix::Identity(dim, dim), Matrix::Identity(dim, dim), 20.0} {}
  AlignmentTables view() const { return {src, tgt}; }
};

}  // namespace

static void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto p = MlpParams::init(192, hidden, 1, rng);
  const Matrix x = random_matrix(64, 192, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_apply(p, x));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpForward)->Arg(256)->Arg(2048);

static void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto p = MlpParams::init(192, hidden, 1, rng);
  const Matrix x = random_matrix(64, 192, rng);
  const Matrix g = Matrix::Ones(64, 1);
  for (auto _ : state) {
    const auto fwd = mlp_forward(p, x);
    benchmark::DoNotOptimize(mlp_backward(p, fwd.cache, g));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(256)->Arg(2048);

static void BM_EntityAlignDist(benchmark::State& state) {
  Fixture f(state.range(0));
  Index s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(entity_align_dist(f.align, f.view(), s));
    s = (s + 1) % 200;
  }
}
BENCHMARK(BM_EntityAlignDist)->Arg(64)->Arg(128);

static void BM_SampleAlignedTriplet(benchmark::State& state) {
  Fixture f(64);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_aligned_triplet(f.align, f.view(), {1, 2, 3}, rng));
}
BENCHMARK(BM_SampleAlignedTriplet);

static void BM_LogprobGrad(benchmark::State& state) {
  Fixture f(64);
  for (auto _ : state) benchmark::DoNotOptimize(logprob_grad(f.align, f.view(), {1, 2, 3}, {4, 5, 6}));
}
BENCHMARK(BM_LogprobGrad);

static void BM_DiscLoss(benchmark::State& state) {
  Fixture f(64);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto d = DiscriminatorParams::init(64, hidden, f.rng);
  std::vector<Triplet> real, fake;
  for (int i = 0; i < 64; ++i) {
    real.push_back({static_cast<Index>(uniform_index(f.rng, 200)), static_cast<Index>(uniform_index(f.rng, 20)),
                    static_cast<Index>(uniform_index(f.rng, 200))});
    fake.push_back({static_cast<Index>(uniform_index(f.rng, 200)), static_cast<Index>(uniform_index(f.rng, 20)),
                    static_cast<Index>(uniform_index(f.rng, 200))});
  }
  DiscriminatorGrad g;
  for (auto _ : state) benchmark::DoNotOptimize(disc_loss(d, f.tgt, real, fake, &g));
}
BENCHMARK(BM_DiscLoss)->Arg(256)->Arg(2048);

static void BM_EstimateMi(benchmark::State& state) {
  Fixture f(64);
  const auto mi = MiEstimatorParams::init(64, 64, 256, f.rng);
  const auto batch = sample_mi_batch(f.align, f.view(), 64, f.rng);
  MlpGrad g;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_mi(mi, batch, f.view(), &g));
}
BENCHMARK(BM_EstimateMi);

static void BM_Evaluate(benchmark::State& state) {
  Fixture f(64);
  std::vector<IndexPair> pairs;
  for (Index i = 0; i < 200; ++i) pairs.push_back({i, i});
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(f.align, f.view(), pairs));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_Evaluate);

static void BM_TransEEpoch(benchmark::State& state) {
  const auto pair = synthesize_aligned_pair(200, 20, 3000, 0.9, 7);
  EmbedConfig c;
  c.dim = 64;
  c.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_embeddings(pair.source, c));
}
BENCHMARK(BM_TransEEpoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

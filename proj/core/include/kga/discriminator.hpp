#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kga/embedding.hpp"
#include "kga/graph.hpp"
#include "kga/numeric.hpp"

namespace kga {

/// D(x) = σ(f(v_h) + f(v_t) + g(v_h, v_r, v_t)). f is shared by head and tail.
struct DiscriminatorParams {
  MlpParams f_net;  // d → hidden → 1
  MlpParams g_net;  // 3d → hidden → 1

  static DiscriminatorParams init(std::size_t dim, std::size_t hidden, Rng& rng);
  static DiscriminatorParams zeros(std::size_t dim, std::size_t hidden);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

struct DiscriminatorGrad {
  MlpGrad f_net;
  MlpGrad g_net;

  std::vector<const Matrix*> tensors() const;
};

enum class FakeSourceMode { Adversarial, Random, RandomPlusAdversarial };

std::string to_string(FakeSourceMode mode);
FakeSourceMode parse_fake_mode(const std::string& name);

/// Scores are clamped to [ε, 1-ε] before taking logs.
inline constexpr double kScoreClamp = 1e-7;

/// Potential sum f(v_h) + f(v_t) + g(v_h ⊕ v_r ⊕ v_t) for each triplet.
Vector disc_logits(const DiscriminatorParams& params, const EmbeddingTable& target,
                   std::span<const Triplet> batch);

double disc_score(const DiscriminatorParams& params, const EmbeddingTable& target, const Triplet& x);
Vector disc_scores(const DiscriminatorParams& params, const EmbeddingTable& target,
                   std::span<const Triplet> batch);

/// -mean log D(real) - mean log(1 - D(fake)).
double disc_loss(const DiscriminatorParams& params, const EmbeddingTable& target,
                 std::span<const Triplet> real, std::span<const Triplet> fake,
                 DiscriminatorGrad* grad = nullptr);

/// One SGD step on the loss; returns the loss before the step.
double disc_train_step(DiscriminatorParams& params, const EmbeddingTable& target,
                       std::span<const Triplet> real, std::span<const Triplet> fake,
                       const SgdConfig& sgd);

/// A real target triplet with its head, relation, or tail (uniform choice)
/// replaced uniformly at random, rejecting triplets present in the graph.
Triplet random_corruption(const KnowledgeGraph& target, Rng& rng);

using TripletSource = std::function<Triplet(Rng&)>;

/// Adversarial: all from `adversarial`. Random: all from `random`.
/// RandomPlusAdversarial: floor(n/2) random first, then ceil(n/2) adversarial.
std::vector<Triplet> make_fake_batch(FakeSourceMode mode, const TripletSource& adversarial,
                                     const TripletSource& random, std::size_t batch_size, Rng& rng);

}  // namespace kga

#include "kga/discriminator.hpp"

#include <algorithm>
#include <cmath>

#include "kga/error.hpp"

namespace kga {

DiscriminatorParams DiscriminatorParams::init(std::size_t dim, std::size_t hidden, Rng& rng) {
  DiscriminatorParams p;
  p.f_net = MlpParams::init(dim, hidden, 1, rng);
  p.g_net = MlpParams::init(3 * dim, hidden, 1, rng);
  return p;
}

DiscriminatorParams DiscriminatorParams::zeros(std::size_t dim, std::size_t hidden) {
  return {MlpParams::zeros(dim, hidden, 1), MlpParams::zeros(3 * dim, hidden, 1)};
}

std::vector<Matrix*> DiscriminatorParams::tensors() {
  auto out = f_net.tensors();
  for (auto* m : g_net.tensors()) out.push_back(m);
  return out;
}

std::vector<const Matrix*> DiscriminatorParams::tensors() const {
  auto out = f_net.tensors();
  for (auto* m : g_net.tensors()) out.push_back(m);
  return out;
}

std::vector<const Matrix*> DiscriminatorGrad::tensors() const {
  auto out = f_net.tensors();
  for (auto* m : g_net.tensors()) out.push_back(m);
  return out;
}

std::string to_string(FakeSourceMode mode) {
  switch (mode) {
    case FakeSourceMode::Adversarial: return "adv";
    case FakeSourceMode::Random: return "rand";
    case FakeSourceMode::RandomPlusAdversarial: return "rand+adv";
  }
  return "unknown";
}

FakeSourceMode parse_fake_mode(const std::string& name) {
  if (name == "adv") return FakeSourceMode::Adversarial;
  if (name == "rand") return FakeSourceMode::Random;
  if (name == "rand+adv") return FakeSourceMode::RandomPlusAdversarial;
  throw ArgumentError("unknown fake mode '" + name + "' (adv, rand, rand+adv)");
}

namespace {

struct DiscInputs {
  Matrix entity_rows;  // heads then tails, 2n × d
  Matrix triplet_rows; // n × 3d
};

DiscInputs gather(const DiscriminatorParams& params, const EmbeddingTable& target,
                  std::span<const Triplet> batch) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  if (params.f_net.input_dim() != target.dim() || params.g_net.input_dim() != 3 * target.dim()) {
    throw ShapeError("discriminator expects dim " + std::to_string(params.f_net.input_dim()) +
                     ", target embeddings have " + std::to_string(target.dim()));
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  DiscInputs in{Matrix(2 * n, d), Matrix(n, 3 * d)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& x = batch[i];
    if (x.head >= target.num_entities() || x.tail >= target.num_entities() ||
        x.relation >= target.num_relations()) {
      throw IndexError("discriminator triplet index out of range");
    }
    in.entity_rows.row(i) = target.entities.row(x.head);
    in.entity_rows.row(n + i) = target.entities.row(x.tail);
    in.triplet_rows.row(i) << target.entities.row(x.head), target.relations.row(x.relation),
        target.entities.row(x.tail);
  }
  return in;
}

}  // namespace

Vector disc_logits(const DiscriminatorParams& params, const EmbeddingTable& target,
                   std::span<const Triplet> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto in = gather(params, target, batch);
  const Matrix f = mlp_apply(params.f_net, in.entity_rows);
  const Matrix g = mlp_apply(params.g_net, in.triplet_rows);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = f(i, 0) + f(n + i, 0) + g(i, 0);
  return z;
}

Vector disc_scores(const DiscriminatorParams& params, const EmbeddingTable& target,
                   std::span<const Triplet> batch) {
  return disc_logits(params, target, batch).unaryExpr([](double z) { return sigmoid(z); });
}

double disc_score(const DiscriminatorParams& params, const EmbeddingTable& target, const Triplet& x) {
  return disc_scores(params, target, std::span<const Triplet>(&x, 1))(0);
}

double disc_loss(const DiscriminatorParams& params, const EmbeddingTable& target,
                 std::span<const Triplet> real, std::span<const Triplet> fake,
                 DiscriminatorGrad* grad) {
  if (real.empty() || fake.empty()) throw ArgumentError("discriminator batches must be nonempty");
  std::vector<Triplet> all(real.begin(), real.end());
  all.insert(all.end(), fake.begin(), fake.end());
  const auto n = static_cast<Eigen::Index>(all.size());
  const auto n_real = static_cast<Eigen::Index>(real.size());
  const auto in = gather(params, target, all);
  auto f = mlp_forward(params.f_net, in.entity_rows);
  auto g = mlp_forward(params.g_net, in.triplet_rows);

  double real_loss = 0.0, fake_loss = 0.0;
  Matrix dz = Matrix::Zero(n, 1);
  const double w_real = 1.0 / static_cast<double>(real.size());
  const double w_fake = 1.0 / static_cast<double>(fake.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = f.output(i, 0) + f.output(n + i, 0) + g.output(i, 0);
    const double s = sigmoid(z);
    const bool clamped_low = s < kScoreClamp;
    const bool clamped_high = s > 1.0 - kScoreClamp;
    const double c = std::clamp(s, kScoreClamp, 1.0 - kScoreClamp);
    if (i < n_real) {
      real_loss -= std::log(c);
      if (!clamped_low && !clamped_high) dz(i, 0) = -(1.0 - s) * w_real;
    } else {
      fake_loss -= std::log1p(-c);
      if (!clamped_low && !clamped_high) dz(i, 0) = s * w_fake;
    }
  }
  const double loss = real_loss * w_real + fake_loss * w_fake;
  if (!std::isfinite(loss)) throw NumericError("discriminator loss is not finite");
  if (grad) {
    Matrix df(2 * n, 1);
    df << dz, dz;
    grad->f_net = mlp_backward(params.f_net, f.cache, df).params;
    grad->g_net = mlp_backward(params.g_net, g.cache, dz).params;
  }
  return loss;
}

double disc_train_step(DiscriminatorParams& params, const EmbeddingTable& target,
                       std::span<const Triplet> real, std::span<const Triplet> fake,
                       const SgdConfig& sgd) {
  DiscriminatorGrad grad;
  const double loss = disc_loss(params, target, real, fake, &grad);
  auto p = params.tensors();
  auto g = grad.tensors();
  sgd_step(p, g, sgd);
  return loss;
}

Triplet random_corruption(const KnowledgeGraph& target, Rng& rng) {
  if (target.num_triplets() == 0) throw SamplingError("cannot corrupt triplets of an empty graph");
  const std::size_t ne = target.num_entities();
  const std::size_t nr = target.num_relations();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Triplet t = target.triplets()[uniform_index(rng, target.num_triplets())];
    switch (uniform_index(rng, 3)) {
      case 0: t.head = static_cast<Index>(uniform_index(rng, ne)); break;
      case 1: t.relation = static_cast<Index>(uniform_index(rng, nr)); break;
      default: t.tail = static_cast<Index>(uniform_index(rng, ne)); break;
    }
    if (!target.contains(t)) return t;
  }
  throw SamplingError("could not find a corrupted triplet outside the target graph");
}

std::vector<Triplet> make_fake_batch(FakeSourceMode mode, const TripletSource& adversarial,
                                     const TripletSource& random, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ArgumentError("fake batch size must be positive");
  std::size_t n_random = 0;
  switch (mode) {
    case FakeSourceMode::Adversarial: n_random = 0; break;
    case FakeSourceMode::Random: n_random = batch_size; break;
    case FakeSourceMode::RandomPlusAdversarial: n_random = batch_size / 2; break;
  }
  std::vector<Triplet> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < n_random; ++i) out.push_back(random(rng));
  for (std::size_t i = n_random; i < batch_size; ++i) out.push_back(adversarial(rng));
  return out;
}

}  // namespace kga

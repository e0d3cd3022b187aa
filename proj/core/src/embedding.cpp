#include "kga/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kga/checkpoint_io.hpp"
#include "kga/error.hpp"

namespace kga {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::TransE: return "transe";
    case ModelKind::TransH: return "transh";
    case ModelKind::DistMult: return "distmult";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "transe") return ModelKind::TransE;
  if (name == "transh") return ModelKind::TransH;
  if (name == "distmult") return ModelKind::DistMult;
  throw ArgumentError("unknown embedding model '" + name + "' (transe, transh, distmult)");
}

void EmbedConfig::validate() const {
  if (dim == 0) throw ArgumentError("embedding dim must be positive");
  if (!(margin > 0.0)) throw ArgumentError("margin must be positive");
  if (negatives_per_positive == 0) throw ArgumentError("negatives per positive must be positive");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
}

namespace {

void check_triplet(const EmbeddingTable& table, const Triplet& t) {
  if (t.head >= table.num_entities() || t.tail >= table.num_entities() ||
      t.relation >= table.num_relations()) {
    throw IndexError("triplet index out of range for embedding table");
  }
}

// TransH: d = (h - t) - n·(h - t) n + r
RowVector transh_residual(const EmbeddingTable& table, const Triplet& t) {
  const RowVector a = table.entities.row(t.head) - table.entities.row(t.tail);
  const auto n = table.normals.row(t.relation);
  return a - a.dot(n) * n + table.relations.row(t.relation);
}

// Adds scale · ∂score/∂params for one triplet into grad.
void accumulate_score_grad(const EmbeddingTable& table, const Triplet& t, double scale,
                           EmbeddingGrad& grad) {
  const auto h = table.entities.row(t.head);
  const auto tl = table.entities.row(t.tail);
  const auto r = table.relations.row(t.relation);
  switch (table.kind) {
    case ModelKind::TransE: {
      const RowVector d = h + r - tl;
      const double norm = d.norm();
      if (norm == 0.0) return;
      const RowVector u = d / norm;
      grad.entities.row(t.head) -= scale * u;
      grad.relations.row(t.relation) -= scale * u;
      grad.entities.row(t.tail) += scale * u;
      return;
    }
    case ModelKind::TransH: {
      const auto n = table.normals.row(t.relation);
      const RowVector a = h - tl;
      const RowVector d = transh_residual(table, t);
      const double norm = d.norm();
      if (norm == 0.0) return;
      const RowVector u = d / norm;
      const RowVector proj = u - n.dot(u) * n;
      grad.entities.row(t.head) -= scale * proj;
      grad.entities.row(t.tail) += scale * proj;
      grad.relations.row(t.relation) -= scale * u;
      grad.normals.row(t.relation) += scale * (n.dot(u) * a + n.dot(a) * u);
      return;
    }
    case ModelKind::DistMult: {
      grad.entities.row(t.head) += scale * r.cwiseProduct(tl);
      grad.entities.row(t.tail) += scale * r.cwiseProduct(h);
      grad.relations.row(t.relation) += scale * h.cwiseProduct(tl);
      return;
    }
  }
}

}  // namespace

double score_triplet(const EmbeddingTable& table, const Triplet& t) {
  check_triplet(table, t);
  const auto h = table.entities.row(t.head);
  const auto tl = table.entities.row(t.tail);
  const auto r = table.relations.row(t.relation);
  switch (table.kind) {
    case ModelKind::TransE: return -(h + r - tl).norm();
    case ModelKind::TransH: return -transh_residual(table, t).norm();
    case ModelKind::DistMult: return (h.cwiseProduct(r).cwiseProduct(tl)).sum();
  }
  return 0.0;
}

Triplet negative_sample(const Triplet& t, const KnowledgeGraph& graph, Rng& rng) {
  const std::size_t n = graph.num_entities();
  if (n == 0) throw SamplingError("cannot corrupt a triplet of an empty graph");
  const bool head_first = uniform_index(rng, 2) == 0;
  auto corrupt = [&t](bool head, Index e) {
    Triplet c = t;
    (head ? c.head : c.tail) = e;
    return c;
  };
  for (int attempt = 0; attempt < 16; ++attempt) {
    const auto c = corrupt(head_first, static_cast<Index>(uniform_index(rng, n)));
    if (!graph.contains(c)) return c;
  }
  // Dense neighbourhoods: enumerate the valid corruptions explicitly.
  for (const bool head : {head_first, !head_first}) {
    std::vector<Index> valid;
    for (Index e = 0; e < n; ++e) {
      if (!graph.contains(corrupt(head, e))) valid.push_back(e);
    }
    if (!valid.empty()) return corrupt(head, valid[uniform_index(rng, valid.size())]);
  }
  throw SamplingError("no valid corruption exists for the triplet");
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
}

EmbeddingTable init_embeddings(std::size_t n_entities, std::size_t n_relations,
                               const EmbedConfig& config, Rng& rng) {
  config.validate();
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
  auto fill = [&](std::size_t rows) {
    Matrix m(rows, config.dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -bound, bound);
    return m;
  };
  EmbeddingTable table;
  table.kind = config.kind;
  table.entities = fill(n_entities);
  table.relations = fill(n_relations);
  if (config.kind != ModelKind::DistMult) {
    normalize_rows(table.entities);
    normalize_rows(table.relations);
  } else {
    table.entities /= bound * std::sqrt(static_cast<double>(config.dim));
    table.relations /= bound * std::sqrt(static_cast<double>(config.dim));
  }
  if (config.kind == ModelKind::TransH) {
    table.normals = fill(n_relations);
    normalize_rows(table.normals);
  }
  return table;
}

EmbeddingGrad EmbeddingGrad::zeros_like(const EmbeddingTable& table) {
  EmbeddingGrad g;
  g.entities = Matrix::Zero(table.entities.rows(), table.entities.cols());
  g.relations = Matrix::Zero(table.relations.rows(), table.relations.cols());
  g.normals = Matrix::Zero(table.normals.rows(), table.normals.cols());
  return g;
}

double margin_loss(const EmbeddingTable& table, std::span<const TrainingPair> pairs, double margin,
                   EmbeddingGrad* grad) {
  double total = 0.0;
  for (const auto& p : pairs) {
    const double violation = margin - score_triplet(table, p.positive) + score_triplet(table, p.negative);
    if (violation <= 0.0) continue;
    total += violation;
    if (grad) {
      accumulate_score_grad(table, p.positive, -1.0, *grad);
      accumulate_score_grad(table, p.negative, 1.0, *grad);
    }
  }
  return total;
}

namespace {

void apply_rows(Matrix& param, Matrix& grad, const std::vector<Index>& rows, double lr) {
  for (Index r : rows) {
    if (!grad.row(r).allFinite()) throw NumericError("non-finite embedding gradient");
    param.row(r) -= lr * grad.row(r);
    grad.row(r).setZero();
  }
}

void unique_sorted(std::vector<Index>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

EmbeddingTable train_embeddings(const KnowledgeGraph& graph, const EmbedConfig& config) {
  config.validate();
  if (graph.num_triplets() == 0) throw ArgumentError("cannot embed a graph with no triplets");
  SeedStreams streams(config.rng_seed);
  Rng init_rng = streams.stream("embed.init");
  Rng rng = streams.stream("embed.train");
  EmbeddingTable table = init_embeddings(graph.num_entities(), graph.num_relations(), config, init_rng);
  EmbeddingGrad grad = EmbeddingGrad::zeros_like(table);

  std::vector<std::size_t> order(graph.num_triplets());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingPair> batch;
  std::vector<Index> ent_rows, rel_rows;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      ent_rows.clear();
      rel_rows.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const Triplet& pos = graph.triplets()[order[i]];
        for (std::size_t k = 0; k < config.negatives_per_positive; ++k) {
          const Triplet neg = negative_sample(pos, graph, rng);
          batch.push_back({pos, neg});
          ent_rows.insert(ent_rows.end(), {pos.head, pos.tail, neg.head, neg.tail});
          rel_rows.push_back(pos.relation);
        }
      }
      const double loss = margin_loss(table, batch, config.margin, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite embedding loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      }
      unique_sorted(ent_rows);
      unique_sorted(rel_rows);
      apply_rows(table.entities, grad.entities, ent_rows, config.learning_rate);
      apply_rows(table.relations, grad.relations, rel_rows, config.learning_rate);
      if (config.kind == ModelKind::TransH) {
        apply_rows(table.normals, grad.normals, rel_rows, config.learning_rate);
        for (Index r : rel_rows) {
          const double norm = table.normals.row(r).norm();
          if (norm > 0.0) table.normals.row(r) /= norm;
        }
      }
    }
    if (config.kind != ModelKind::DistMult) normalize_rows(table.entities);
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  MatrixArchive archive;
  archive.kind = static_cast<CheckpointKind>(table.kind);
  archive.put("entity", table.entities);
  archive.put("relation", table.relations);
  if (table.kind == ModelKind::TransH) archive.put("normal", table.normals);
  write_archive(archive, path);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  const auto archive = read_archive(path);
  if (archive.kind == CheckpointKind::Alignment) {
    throw FormatError("'" + path.string() + "' is an alignment checkpoint, not embeddings");
  }
  EmbeddingTable table;
  table.kind = static_cast<ModelKind>(archive.kind);
  table.entities = archive.get("entity");
  table.relations = archive.get("relation");
  if (table.kind == ModelKind::TransH) table.normals = archive.get("normal");
  if (table.entities.cols() != table.relations.cols()) {
    throw FormatError("entity and relation dims differ in '" + path.string() + "'");
  }
  return table;
}

}  // namespace kga

#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "kga/alignment.hpp"
#include "kga/embedding.hpp"
#include "kga/numeric.hpp"
#include "kga/rng.hpp"

namespace kga::test {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -scale, scale);
  return m;
}

inline EmbeddingTable random_table(std::size_t n_entities, std::size_t n_relations, std::size_t dim,
                                   Rng& rng, ModelKind kind = ModelKind::TransE) {
  EmbeddingTable t;
  t.kind = kind;
  t.entities = random_matrix(static_cast<Eigen::Index>(n_entities), static_cast<Eigen::Index>(dim), rng);
  t.relations = random_matrix(static_cast<Eigen::Index>(n_relations), static_cast<Eigen::Index>(dim), rng);
  if (kind == ModelKind::TransH) {
    t.normals = random_matrix(static_cast<Eigen::Index>(n_relations), static_cast<Eigen::Index>(dim), rng);
    normalize_rows(t.normals);
  }
  return t;
}

inline AlignmentParams random_alignment(std::size_t dim, double eta, Rng& rng) {
  return {random_matrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim), rng, 0.7),
          random_matrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim), rng, 0.7), eta};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kga_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace kga::test

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kga/rng.hpp"

namespace kga {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

void require_finite(const Matrix& m, const char* what);

/// Two affine layers with a LeakyReLU in between: y = W2ᵀ·lrelu(W1ᵀ·x + b1) + b2.
/// Weights are stored input-major (w1 is input_dim × hidden_dim) so a batch
/// forward pass is a plain row-major product.
struct MlpParams {
  Matrix w1;
  Matrix b1;  // 1 × hidden
  Matrix w2;
  Matrix b2;  // 1 × output
  double slope = 0.01;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(w2.cols()); }

  std::vector<Matrix*> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::vector<const Matrix*> tensors() const { return {&w1, &b1, &w2, &b2}; }

  /// All-zero network of the given shape.
  static MlpParams zeros(std::size_t input, std::size_t hidden, std::size_t output,
                         double slope = 0.01);
  /// Uniform in ±1/sqrt(fan_in) per layer.
  static MlpParams init(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng,
                        double slope = 0.01);
};

struct MlpGrad {
  Matrix w1, b1, w2, b2;

  std::vector<Matrix*> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::vector<const Matrix*> tensors() const { return {&w1, &b1, &w2, &b2}; }

  static MlpGrad zeros_like(const MlpParams& p);
  MlpGrad& operator+=(const MlpGrad& o);
};

struct MlpCache {
  Matrix input;
  Matrix pre;     // batch × hidden, before activation
  Matrix hidden;  // batch × hidden, after activation
};

struct MlpForward {
  Matrix output;
  MlpCache cache;
};

MlpForward mlp_forward(const MlpParams& params, const Matrix& input);

/// Forward pass that keeps no cache; for scoring.
Matrix mlp_apply(const MlpParams& params, const Matrix& input);

struct MlpBackward {
  MlpGrad params;
  Matrix input;
};

MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache,
                         const Matrix& output_gradient);

struct SgdConfig {
  double learning_rate = 0.001;
  std::optional<double> clip_norm;
};

/// params[i] -= lr * grads[i], after rescaling the joint gradient to clip_norm
/// when its global L2 norm exceeds it. Throws NumericError before touching any
/// parameter if a gradient entry is not finite.
void sgd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
              const SgdConfig& config);

struct Svd {
  Matrix u;
  Vector singular_values;  // non-negative, descending
  Matrix v;
};

/// Thin SVD, m = u · diag(s) · vᵀ.
Svd svd(const Matrix& m);

/// Compares analytic gradients against central differences of `loss`.
/// Perturbs each parameter entry in place and restores it. Returns the max over
/// entries of |analytic - numeric| / max(1, |numeric|).
double finite_diff_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                         std::span<const Matrix* const> analytic, double step);

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log Σ exp(v) with max subtraction.
double log_sum_exp(std::span<const double> v);

/// Rounds every entry to the nearest 32-bit float (checkpoint precision).
void round_to_float(Matrix& m);

}  // namespace kga

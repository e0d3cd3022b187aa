#include "kga/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kga/error.hpp"

namespace kga {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

MlpParams MlpParams::zeros(std::size_t input, std::size_t hidden, std::size_t output,
                           double slope) {
  MlpParams p;
  p.w1 = Matrix::Zero(input, hidden);
  p.b1 = Matrix::Zero(1, hidden);
  p.w2 = Matrix::Zero(hidden, output);
  p.b2 = Matrix::Zero(1, output);
  p.slope = slope;
  return p;
}

MlpParams MlpParams::init(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng,
                          double slope) {
  MlpParams p = zeros(input, hidden, output, slope);
  auto fill = [&rng](Matrix& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -bound, bound);
  };
  fill(p.w1, input);
  fill(p.b1, input);
  fill(p.w2, hidden);
  fill(p.b2, hidden);
  return p;
}

MlpGrad MlpGrad::zeros_like(const MlpParams& p) {
  return {Matrix::Zero(p.w1.rows(), p.w1.cols()), Matrix::Zero(1, p.b1.cols()),
          Matrix::Zero(p.w2.rows(), p.w2.cols()), Matrix::Zero(1, p.b2.cols())};
}

MlpGrad& MlpGrad::operator+=(const MlpGrad& o) {
  w1 += o.w1;
  b1 += o.b1;
  w2 += o.w2;
  b2 += o.b2;
  return *this;
}

namespace {

void check_input(const MlpParams& params, const Matrix& input) {
  if (static_cast<std::size_t>(input.cols()) != params.input_dim()) {
    throw ShapeError("mlp input has " + std::to_string(input.cols()) + " columns, expected " +
                     std::to_string(params.input_dim()));
  }
}

}  // namespace

MlpForward mlp_forward(const MlpParams& params, const Matrix& input) {
  check_input(params, input);
  MlpForward out;
  out.cache.input = input;
  out.cache.pre = input * params.w1;
  out.cache.pre.rowwise() += params.b1.row(0);
  out.cache.hidden = out.cache.pre.unaryExpr([s = params.slope](double x) { return leaky_relu(x, s); });
  out.output = out.cache.hidden * params.w2;
  out.output.rowwise() += params.b2.row(0);
  return out;
}

Matrix mlp_apply(const MlpParams& params, const Matrix& input) {
  check_input(params, input);
  Matrix hidden = input * params.w1;
  hidden.rowwise() += params.b1.row(0);
  hidden = hidden.unaryExpr([s = params.slope](double x) { return leaky_relu(x, s); });
  Matrix out = hidden * params.w2;
  out.rowwise() += params.b2.row(0);
  return out;
}

MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache,
                         const Matrix& output_gradient) {
  const auto batch = cache.input.rows();
  if (static_cast<std::size_t>(cache.input.cols()) != params.input_dim() ||
      static_cast<std::size_t>(cache.pre.cols()) != params.hidden_dim() ||
      cache.pre.rows() != batch || cache.hidden.rows() != batch) {
    throw ContractError("mlp cache does not match parameter shapes");
  }
  if (output_gradient.rows() != batch ||
      static_cast<std::size_t>(output_gradient.cols()) != params.output_dim()) {
    throw ContractError("mlp output gradient does not match the cached batch");
  }
  MlpBackward g;
  g.params.w2 = cache.hidden.transpose() * output_gradient;
  g.params.b2 = output_gradient.colwise().sum();
  Matrix d_hidden = output_gradient * params.w2.transpose();
  const double slope = params.slope;
  for (Eigen::Index i = 0; i < d_hidden.size(); ++i) {
    if (!(cache.pre.data()[i] > 0.0)) d_hidden.data()[i] *= slope;
  }
  g.params.w1 = cache.input.transpose() * d_hidden;
  g.params.b1 = d_hidden.colwise().sum();
  g.input = d_hidden * params.w1.transpose();
  return g;
}

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
              const SgdConfig& config) {
  if (!(config.learning_rate >= 0.0)) throw ArgumentError("learning rate must be non-negative");
  if (params.size() != grads.size()) throw ShapeError("sgd: parameter/gradient count mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
      throw ShapeError("sgd: gradient shape does not match its parameter");
    }
    require_finite(*grads[i], "gradient");
    sq += grads[i]->squaredNorm();
  }
  double scale = config.learning_rate;
  if (config.clip_norm) {
    const double norm = std::sqrt(sq);
    if (norm > *config.clip_norm) scale *= *config.clip_norm / norm;
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= scale * *grads[i];
}

Svd svd(const Matrix& m) {
  require_finite(m, "svd input");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) throw NumericError("svd did not converge");
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

double finite_diff_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                         std::span<const Matrix* const> analytic, double step) {
  if (!(step > 0.0)) throw ArgumentError("finite difference step must be positive");
  if (params.size() != analytic.size()) throw ShapeError("finite_diff_check: count mismatch");
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    const Matrix& g = *analytic[t];
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ShapeError("finite_diff_check: gradient shape mismatch");
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + step;
      const double up = loss();
      p.data()[i] = saved - step;
      const double down = loss();
      p.data()[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_check: loss is not finite");
      }
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(g.data()[i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void round_to_float(Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

}  // namespace kga

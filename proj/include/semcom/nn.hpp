#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "semcom/rng.hpp"

namespace semcom::nn {

/// Batches are row-major in the mathematical sense: one sample per row.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Parameter() = default;
  explicit Parameter(Matrix v)
      : value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        adam_m(Matrix::Zero(value.rows(), value.cols())),
        adam_v(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

/// Ordered by name, which fixes the traversal order of every optimizer step.
using ParameterMap = std::map<std::string, Parameter>;

void zero_grad(ParameterMap& params);

/// Uniform draw in [0, 1) from the top 53 bits of the generator.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double standard_normal(Rng& rng);

/// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

// ---------------------------------------------------------------- layers

template <typename DerivedX, typename DerivedW>
Matrix affine_forward(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedW>& w,
                      const RowVector& b) {
  if (x.cols() != w.rows() || w.cols() != b.cols())
    throw std::invalid_argument("affine_forward: shape mismatch");
  Matrix y = x * w;
  y.rowwise() += b;
  return y;
}

struct AffineGrads {
  Matrix dx;
  Matrix dw;
  RowVector db;
};

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy);

enum class Activation { tanh, relu };

Matrix activation_forward(const Matrix& x, Activation kind);
/// Gradient with respect to the input, computed from the stored forward output.
Matrix activation_backward(const Matrix& y, const Matrix& dy, Activation kind);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Max-shifted softmax cross-entropy for one row of logits.
LossGrad softmax_cross_entropy(const RowVector& logits, int target);

/// Summed cross-entropy over rows; row i is scored against targets[i].
/// Gradient rows are probabilities minus one-hot, scaled by `scale`.
LossGrad softmax_cross_entropy_rows(const Matrix& logits, const std::vector<int>& targets, double scale = 1.0);

/// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

// ---------------------------------------------------------------- optimizer

struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;

  /// One bias-corrected update of every parameter from its gradient.
  void step(ParameterMap& params);
};

// ---------------------------------------------------------------- verification

struct GradCheckOptions {
  double epsilon = 1e-4;
  int coordinates = 100;  ///< sampled coordinates; all of them when fewer exist
  std::uint64_t seed = 1;
  /// Parameter names to leave out of the sample.
  std::vector<std::string> exclude;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  int checked = 0;
};

/// `loss(backward)` evaluates the model at the current parameter values; when
/// `backward` is true it must also fill every Parameter::grad. Central
/// differences are compared coordinate-wise with
/// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport gradient_check(ParameterMap& params, const std::function<double(bool)>& loss,
                               const GradCheckOptions& opts = {});

// ---------------------------------------------------------------- persistence

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, Matrix> arrays;

  std::string to_string() const;
  static Checkpoint from_string(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

Checkpoint make_checkpoint(const ParameterMap& params, nlohmann::json config);
/// Copies stored arrays into matching parameters; throws on missing names or shape mismatch.
void restore(ParameterMap& params, const Checkpoint& ckpt);

}  // namespace semcom::nn

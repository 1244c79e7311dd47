#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "semcom/nn.hpp"

using namespace semcom;
using namespace semcom::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

// Fixed random projection so the scalar loss exercises every output.
double project(const Matrix& y, const Matrix& r) { return y.cwiseProduct(r).sum(); }

}  // namespace

TEST(Affine, IdentityAndBiasGradient) {
  Rng rng(1);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix id = Matrix::Identity(3, 3);
  EXPECT_TRUE(affine_forward(x, id, RowVector::Zero(3)).isApprox(x));
  const auto g = affine_backward(x, id, Matrix::Ones(4, 3));
  EXPECT_TRUE(g.db.isApprox(RowVector::Constant(3, 4.0)));
  EXPECT_THROW(affine_forward(x, Matrix::Zero(2, 3), RowVector::Zero(3)), std::invalid_argument);
}

TEST(Affine, FiniteDifferences) {
  Rng rng(2);
  ParameterMap p;
  p.emplace("x", Parameter(random_matrix(3, 5, rng)));
  p.emplace("w", Parameter(random_matrix(5, 4, rng)));
  p.emplace("b", Parameter(random_matrix(1, 4, rng)));
  const Matrix r = random_matrix(3, 4, rng);
  auto loss = [&](bool backward) {
    const RowVector b = p.at("b").value;
    const Matrix y = affine_forward(p.at("x").value, p.at("w").value, b);
    if (backward) {
      const auto g = affine_backward(p.at("x").value, p.at("w").value, r);
      p.at("x").grad += g.dx;
      p.at("w").grad += g.dw;
      p.at("b").grad += g.db;
    }
    return project(y, r);
  };
  const auto rep = gradient_check(p, loss, {1e-4, 200, 1, {}});
  EXPECT_EQ(rep.checked, 15 + 20 + 4);
  EXPECT_LT(rep.max_relative_error, 1e-8);  // linear: central differences are exact up to rounding
}

TEST(Activation, ValuesAndDerivatives) {
  Matrix z = Matrix::Zero(1, 1);
  EXPECT_EQ(activation_forward(z, Activation::tanh)(0, 0), 0.0);
  EXPECT_EQ(activation_backward(activation_forward(z, Activation::tanh), Matrix::Ones(1, 1), Activation::tanh)(0, 0), 1.0);
  Matrix neg = Matrix::Constant(1, 1, -2.0);
  const Matrix y = activation_forward(neg, Activation::relu);
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_EQ(activation_backward(y, Matrix::Ones(1, 1), Activation::relu)(0, 0), 0.0);
}

TEST(Activation, FiniteDifferences) {
  for (auto kind : {Activation::tanh, Activation::relu}) {
    Rng rng(3);
    ParameterMap p;
    Matrix x = random_matrix(4, 6, rng);
    // keep relu inputs away from the kink
    x = x.unaryExpr([](double v) { return std::abs(v) < 0.05 ? v + 0.2 : v; });
    p.emplace("x", Parameter(x));
    const Matrix r = random_matrix(4, 6, rng);
    auto loss = [&](bool backward) {
      const Matrix y = activation_forward(p.at("x").value, kind);
      if (backward) p.at("x").grad += activation_backward(y, r, kind);
      return project(y, r);
    };
    EXPECT_LT(gradient_check(p, loss).max_relative_error, 1e-5);
  }
}

TEST(SoftmaxCrossEntropy, UniformLogitsAndNormalization) {
  const int v = 37;
  const auto lg = softmax_cross_entropy(RowVector::Zero(v), 5);
  EXPECT_NEAR(lg.loss, std::log(static_cast<double>(v)), 1e-12);
  Rng rng(4);
  const Matrix logits = 30.0 * random_matrix(5, v, rng);
  const Matrix p = softmax_rows(logits);
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  // gradient is probabilities minus one-hot
  const auto one = softmax_cross_entropy(logits.row(0), 3);
  Matrix expected = p.row(0);
  expected(0, 3) -= 1.0;
  EXPECT_TRUE(one.grad.isApprox(expected, 1e-12));
}

TEST(SoftmaxCrossEntropy, FiniteDifferences) {
  Rng rng(5);
  ParameterMap p;
  p.emplace("logits", Parameter(random_matrix(6, 9, rng)));
  const std::vector<int> targets{0, 8, 3, 3, 1, 7};
  auto loss = [&](bool backward) {
    const auto lg = softmax_cross_entropy_rows(p.at("logits").value, targets, 0.5);
    if (backward) p.at("logits").grad += lg.grad;
    return 0.5 * lg.loss;
  };
  EXPECT_LT(gradient_check(p, loss).max_relative_error, 1e-5);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterMap p;
  p.emplace("w", Parameter(Matrix::Constant(2, 2, 0.7)));
  Adam adam;
  adam.step(p);
  EXPECT_TRUE(p.at("w").value.isApprox(Matrix::Constant(2, 2, 0.7)));
}

TEST(Adam, DescendsAndConverges) {
  ParameterMap p;
  p.emplace("w", Parameter(Matrix::Constant(1, 1, 1.0)));
  Adam adam;
  adam.learning_rate = 0.1;
  p.at("w").grad(0, 0) = 2.0 * p.at("w").value(0, 0);
  adam.step(p);
  EXPECT_LT(p.at("w").value(0, 0), 1.0);

  // f(w) = (w - a)^T A (w - a), optimum f = 0 at w = a
  Eigen::Matrix2d a_mat;
  a_mat << 3.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d target(0.4, -1.3);
  ParameterMap q;
  q.emplace("w", Parameter(Matrix::Zero(2, 1)));
  Adam opt;
  opt.learning_rate = 0.1;
  auto f = [&] {
    const Eigen::Vector2d d = q.at("w").value - target;
    return d.dot(a_mat * d);
  };
  for (int i = 0; i < 200; ++i) {
    zero_grad(q);
    const Eigen::Vector2d d = q.at("w").value - target;
    q.at("w").grad = 2.0 * a_mat * d;
    opt.step(q);
  }
  EXPECT_LT(f(), 1e-3);
}

TEST(GradientCheck, NegativeControlIsDetected) {
  Rng rng(6);
  ParameterMap p;
  p.emplace("w", Parameter(random_matrix(4, 3, rng)));
  const Matrix x = random_matrix(5, 4, rng);
  const Matrix r = random_matrix(5, 3, rng);
  auto loss = [&](bool backward) {
    const Matrix y = activation_forward(x * p.at("w").value, Activation::tanh);
    if (backward) {
      const Matrix da = activation_backward(y, r, Activation::tanh);
      p.at("w").grad += -(x.transpose() * da);  // deliberate sign flip
    }
    return project(y, r);
  };
  EXPECT_GT(gradient_check(p, loss).max_relative_error, 1e-2);
}

TEST(Init, GlorotRangeAndReproducibility) {
  Rng a(7), b(7);
  const Matrix m = glorot_uniform(30, 20, a);
  EXPECT_TRUE(m.isApprox(glorot_uniform(30, 20, b), 0.0));
  const double limit = std::sqrt(6.0 / 50.0);
  EXPECT_LE(m.cwiseAbs().maxCoeff(), limit);
  EXPECT_GT(m.cwiseAbs().maxCoeff(), 0.8 * limit);
}

TEST(Checkpoint, RoundTripsBitExactly) {
  Rng rng(8);
  ParameterMap p;
  p.emplace("a", Parameter(random_matrix(3, 4, rng)));
  p.emplace("b", Parameter(random_matrix(1, 7, rng) * 1e-300));
  const auto ck = make_checkpoint(p, {{"kind", "test"}, {"seed", 8}});
  const auto path = std::filesystem::temp_directory_path() / "semcom_ckpt.json";
  ck.save(path);
  const auto back = Checkpoint::load(path);
  EXPECT_EQ(back.to_string(), ck.to_string());
  ParameterMap q;
  q.emplace("a", Parameter(Matrix::Zero(3, 4)));
  q.emplace("b", Parameter(Matrix::Zero(1, 7)));
  restore(q, back);
  EXPECT_TRUE((q.at("a").value.array() == p.at("a").value.array()).all());
  EXPECT_TRUE((q.at("b").value.array() == p.at("b").value.array()).all());
  EXPECT_EQ(back.config.at("kind"), "test");

  ParameterMap wrong;
  wrong.emplace("a", Parameter(Matrix::Zero(2, 2)));
  EXPECT_THROW(restore(wrong, back), std::invalid_argument);
}

TEST(Checkpoint, RejectsNonFiniteValues) {
  ParameterMap p;
  p.emplace("a", Parameter(Matrix::Constant(1, 1, std::nan(""))));
  EXPECT_THROW(make_checkpoint(p, {}).to_string(), std::domain_error);
}

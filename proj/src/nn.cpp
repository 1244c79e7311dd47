#include "semcom/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "semcom/errors.hpp"

namespace semcom::nn {

void zero_grad(ParameterMap& params) {
  for (auto& [name, p] : params) p.zero_grad();
}

double standard_normal(Rng& rng) {
  // Box-Muller; one draw per call keeps the stream position easy to reason about.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < fan_in; ++i)
    for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = (2.0 * uniform01(rng) - 1.0) * a;
  return w;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy) {
  if (x.cols() != w.rows() || dy.cols() != w.cols() || dy.rows() != x.rows())
    throw std::invalid_argument("affine_backward: shape mismatch");
  AffineGrads g;
  g.dx.noalias() = dy * w.transpose();
  g.dw.noalias() = x.transpose() * dy;
  g.db = dy.colwise().sum();
  return g;
}

Matrix activation_forward(const Matrix& x, Activation kind) {
  switch (kind) {
    case Activation::tanh:
      return x.array().tanh().matrix();
    case Activation::relu:
      return x.array().max(0.0).matrix();
  }
  return x;
}

Matrix activation_backward(const Matrix& y, const Matrix& dy, Activation kind) {
  switch (kind) {
    case Activation::tanh:
      return (dy.array() * (1.0 - y.array().square())).matrix();
    case Activation::relu:
      return (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
  }
  return dy;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  p.colwise() -= logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

LossGrad softmax_cross_entropy(const RowVector& logits, int target) {
  if (target < 0 || target >= logits.size()) throw std::out_of_range("softmax_cross_entropy: target out of range");
  return softmax_cross_entropy_rows(logits, {target});
}

LossGrad softmax_cross_entropy_rows(const Matrix& logits, const std::vector<int>& targets, double scale) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw std::invalid_argument("softmax_cross_entropy_rows: one target per row required");
  LossGrad out;
  Matrix shifted = logits;
  shifted.colwise() -= logits.rowwise().maxCoeff();
  Matrix e = shifted.array().exp().matrix();
  const Eigen::VectorXd z = e.rowwise().sum();
  out.grad = e.array().colwise() / z.array();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= logits.cols()) throw std::out_of_range("softmax_cross_entropy_rows: target out of range");
    out.loss += std::log(z(r)) - shifted(r, t);
    out.grad(r, t) -= 1.0;
  }
  out.grad *= scale;
  return out;
}

void Adam::step(ParameterMap& params) {
  ++step_count;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (auto& [name, p] : params) {
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * p.grad;
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= learning_rate * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + epsilon);
  }
}

GradCheckReport gradient_check(ParameterMap& params, const std::function<double(bool)>& loss,
                               const GradCheckOptions& opts) {
  zero_grad(params);
  loss(true);

  std::vector<std::pair<Parameter*, Eigen::Index>> coords;
  for (auto& [name, p] : params) {
    if (std::find(opts.exclude.begin(), opts.exclude.end(), name) != opts.exclude.end()) continue;
    for (Eigen::Index i = 0; i < p.size(); ++i) coords.emplace_back(&p, i);
  }
  Rng rng(opts.seed);
  const auto want = std::min<std::size_t>(coords.size(), static_cast<std::size_t>(std::max(opts.coordinates, 0)));
  // partial Fisher-Yates to sample without replacement
  for (std::size_t i = 0; i < want; ++i) std::swap(coords[i], coords[i + rng() % (coords.size() - i)]);

  GradCheckReport report;
  for (std::size_t i = 0; i < want; ++i) {
    auto [p, idx] = coords[i];
    double& v = p->value.data()[idx];
    const double analytic = p->grad.data()[idx];
    const double orig = v;
    v = orig + opts.epsilon;
    const double up = loss(false);
    v = orig - opts.epsilon;
    const double down = loss(false);
    v = orig;
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
    ++report.checked;
  }
  return report;
}

std::string Checkpoint::to_string() const {
  nlohmann::json j;
  j["format_version"] = format_version;
  j["config"] = config;
  nlohmann::json arr = nlohmann::json::object();
  for (const auto& [name, m] : arrays) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (!std::isfinite(m(r, c))) throw std::domain_error("Checkpoint: non-finite value in " + name);
        data.push_back(m(r, c));
      }
    arr[name] = {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
  }
  j["arrays"] = std::move(arr);
  return j.dump() + "\n";
}

Checkpoint Checkpoint::from_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Checkpoint ck;
  ck.format_version = j.at("format_version").get<int>();
  if (ck.format_version != kCheckpointVersion)
    throw std::invalid_argument("Checkpoint: unsupported format version " + std::to_string(ck.format_version));
  ck.config = j.at("config");
  for (const auto& [name, a] : j.at("arrays").items()) {
    const auto rows = a.at("shape").at(0).get<Eigen::Index>();
    const auto cols = a.at("shape").at(1).get<Eigen::Index>();
    const auto& data = a.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw std::invalid_argument("Checkpoint: element count does not match shape for " + name);
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    ck.arrays.emplace(name, std::move(m));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << to_string();
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Checkpoint make_checkpoint(const ParameterMap& params, nlohmann::json config) {
  Checkpoint ck;
  ck.config = std::move(config);
  for (const auto& [name, p] : params) ck.arrays.emplace(name, p.value);
  return ck;
}

void restore(ParameterMap& params, const Checkpoint& ckpt) {
  for (auto& [name, p] : params) {
    auto it = ckpt.arrays.find(name);
    if (it == ckpt.arrays.end()) throw std::invalid_argument("Checkpoint: missing array " + name);
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw std::invalid_argument("Checkpoint: shape mismatch for " + name);
    p = Parameter(it->second);
  }
}

}  // namespace semcom::nn

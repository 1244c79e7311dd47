#include "semcom/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semcom::similarity {

std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::word_edit:
      return "word-edit";
    case MetricKind::embedding_cosine:
      return "embedding-cosine";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "word-edit") return MetricKind::word_edit;
  if (name == "embedding-cosine") return MetricKind::embedding_cosine;
  throw std::invalid_argument("unknown similarity metric: " + std::string(name));
}

std::size_t word_levenshtein(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double sim_edit(const Tokens& a, const Tokens& b) {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(word_levenshtein(a, b)) / static_cast<double>(longest);
}

double sim_embed(const Tokens& a, const std::vector<int>& a_ids, const Tokens& b, const std::vector<int>& b_ids,
                 const Eigen::MatrixXd& embeddings) {
  if (a_ids == b_ids) return 1.0;
  auto mean = [&](const std::vector<int>& ids) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (int id : ids) {
      if (id < 0 || id >= embeddings.rows()) throw std::out_of_range("sim_embed: id outside the embedding table");
      m += embeddings.row(id);
    }
    if (!ids.empty()) m /= static_cast<double>(ids.size());
    return m;
  };
  const Eigen::RowVectorXd ma = mean(a_ids), mb = mean(b_ids);
  const double na = ma.norm(), nb = mb.norm();
  if (na == 0.0 || nb == 0.0) return sim_edit(a, b);
  const double cosine = std::clamp(ma.dot(mb) / (na * nb), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

bool accept(double score, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("accept: threshold must lie in [0, 1]");
  return score > threshold;
}

}  // namespace semcom::similarity

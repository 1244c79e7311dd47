#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace semcom::similarity {

using Tokens = std::vector<std::string>;

enum class MetricKind { word_edit, embedding_cosine };

std::string_view metric_name(MetricKind kind);
MetricKind parse_metric(std::string_view name);

/// Word-level Levenshtein distance (unit insert/delete/substitute costs).
std::size_t word_levenshtein(const Tokens& a, const Tokens& b);

/// 1 - lev(a, b) / max(|a|, |b|); 1 when both are empty.
double sim_edit(const Tokens& a, const Tokens& b);

/// Cosine of the mean embedding rows of the two id sequences, mapped from
/// [-1, 1] to [0, 1]. Identical id sequences score exactly 1. Falls back to
/// sim_edit on the tokens when either mean vector has zero norm.
double sim_embed(const Tokens& a, const std::vector<int>& a_ids, const Tokens& b, const std::vector<int>& b_ids,
                 const Eigen::MatrixXd& embeddings);

/// score > threshold. Throws std::invalid_argument for a threshold outside [0, 1].
bool accept(double score, double threshold);

}  // namespace semcom::similarity

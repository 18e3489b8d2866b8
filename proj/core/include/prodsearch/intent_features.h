#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "prodsearch/log_model.h"
#include "prodsearch/matrix.h"
#include "prodsearch/text.h"

namespace prodsearch {

struct IntentFeatures {
  std::vector<double> query_emb;
  std::vector<double> url_emb;
  int click_count = 0;
  int query_length = 0;          // wordpiece tokens
  int snippet_token_count = 0;
  int url_domain_count = 0;
  double similarity = 0;         // share of unique query pieces found in clicked urls
};

/// Product-classifier row: [query_emb | url_emb], 2*dim wide.
std::vector<double> product_features(const QueryRecord& record, const EmbeddingTable& table,
                                     const Vocab& vocab);

/// Scalar columns following the two embedding blocks.
inline constexpr int kScalarFeatureCount = 5;

IntentFeatures extract_features(const QueryRecord& record, const EmbeddingTable& table,
                                const Vocab& vocab);

/// N x (2*dim + 5): [query_emb | url_emb | click_count, query_length,
/// snippet_token_count, url_domain_count, similarity]. Throws on mixed dims.
Matrix assemble_matrix(std::span<const IntentFeatures> features);

/// q0..q{dim-1}, u0..u{dim-1}, then the scalar names.
std::vector<std::string> feature_column_names(std::size_t dim);

/// CSV with a header row; query_ids label each row.
void write_feature_csv(std::ostream& out, std::span<const std::string> query_ids,
                       std::span<const IntentFeatures> features);

}  // namespace prodsearch

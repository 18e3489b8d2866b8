#include "prodsearch/intent_features.h"

#include <charconv>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace prodsearch {

IntentFeatures extract_features(const QueryRecord& record, const EmbeddingTable& table,
                                const Vocab& vocab) {
  IntentFeatures f;
  const auto query_pieces = tokenize(record.query, vocab);
  f.query_emb = embed_text(query_pieces, table);
  f.query_length = static_cast<int>(query_pieces.size());
  f.click_count = static_cast<int>(record.clicks.size());

  std::vector<std::string> url_pieces;
  std::set<std::string> domains;
  for (const auto& click : record.clicks) {
    for (auto& p : tokenize(url_text(click.url, /*include_domain=*/true), vocab)) {
      url_pieces.push_back(std::move(p));
    }
    f.snippet_token_count += static_cast<int>(tokenize(click.snippet, vocab).size());
    if (auto d = extract_domain(click.url); !d.empty()) domains.insert(std::move(d));
  }
  f.url_emb = embed_text(url_pieces, table);
  f.url_domain_count = static_cast<int>(domains.size());

  const std::unordered_set<std::string> uq(query_pieces.begin(), query_pieces.end());
  const std::unordered_set<std::string> uu(url_pieces.begin(), url_pieces.end());
  if (!uq.empty() && !record.clicks.empty()) {
    std::size_t shared = 0;
    for (const auto& p : uq) shared += uu.count(p);
    f.similarity = static_cast<double>(shared) / static_cast<double>(uq.size());
  }
  return f;
}

std::vector<double> product_features(const QueryRecord& record, const EmbeddingTable& table,
                                     const Vocab& vocab) {
  std::vector<double> row = embed_text(tokenize(record.query, vocab), table);
  std::vector<std::string> url_pieces;
  for (const auto& click : record.clicks) {
    for (auto& p : tokenize(url_text(click.url, /*include_domain=*/true), vocab)) {
      url_pieces.push_back(std::move(p));
    }
  }
  const auto url = embed_text(url_pieces, table);
  row.insert(row.end(), url.begin(), url.end());
  return row;
}

Matrix assemble_matrix(std::span<const IntentFeatures> features) {
  if (features.empty()) return Matrix();
  const std::size_t dim = features.front().query_emb.size();
  Matrix m(0, 2 * dim + kScalarFeatureCount);
  std::vector<double> row;
  for (const auto& f : features) {
    if (f.query_emb.size() != dim || f.url_emb.size() != dim) {
      throw std::invalid_argument("feature rows have mixed embedding dimensions");
    }
    row.assign(f.query_emb.begin(), f.query_emb.end());
    row.insert(row.end(), f.url_emb.begin(), f.url_emb.end());
    row.push_back(f.click_count);
    row.push_back(f.query_length);
    row.push_back(f.snippet_token_count);
    row.push_back(f.url_domain_count);
    row.push_back(f.similarity);
    m.append_row(row);
  }
  return m;
}

std::vector<std::string> feature_column_names(std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim; ++i) names.push_back("q" + std::to_string(i));
  for (std::size_t i = 0; i < dim; ++i) names.push_back("u" + std::to_string(i));
  for (const char* s : {"click_count", "query_length", "snippet_token_count",
                        "url_domain_count", "similarity"}) {
    names.emplace_back(s);
  }
  return names;
}

void write_feature_csv(std::ostream& out, std::span<const std::string> query_ids,
                       std::span<const IntentFeatures> features) {
  if (query_ids.size() != features.size()) {
    throw std::invalid_argument("query id count does not match feature rows");
  }
  const Matrix m = assemble_matrix(features);
  const std::size_t dim = features.empty() ? 0 : features.front().query_emb.size();
  out << "query_id";
  for (const auto& n : feature_column_names(dim)) out << ',' << n;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << query_ids[r];
    for (double v : m.row(r)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ',' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace prodsearch

#include "prodsearch/text.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace prodsearch {
namespace {

constexpr std::size_t kMaxWordChars = 100;

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

/// Splits a word into UTF-8 characters. Invalid sequences fall back to
/// single bytes.
std::vector<std::string> split_chars(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    if (i + len > word.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(word[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

std::string strip_prefix(const std::string& piece) {
  if (piece.starts_with(kContinuationPrefix)) {
    return piece.substr(kContinuationPrefix.size());
  }
  return piece;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : ch);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// ---------------------------------------------------------------- Vocab

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> pieces) {
  pieces_.emplace_back(kUnknownPiece);
  index_.emplace(std::string(kUnknownPiece), 0);
  for (auto& p : pieces) {
    if (p.empty()) throw std::invalid_argument("empty vocabulary piece");
    if (index_.count(p)) continue;
    index_.emplace(p, static_cast<int>(pieces_.size()));
    pieces_.push_back(std::move(p));
  }
}

bool Vocab::contains(std::string_view piece) const {
  return index_.find(std::string(piece)) != index_.end();
}

int Vocab::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file " + path);
  for (const auto& p : pieces_) out << p << '\n';
  if (!out) throw std::runtime_error("failed writing vocab file " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocab file " + path);
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    pieces.push_back(line);
  }
  return Vocab(std::move(pieces));
}

Vocab learn_vocab(std::span<const std::string> corpus, std::size_t target_size,
                  std::uint64_t /*seed*/) {
  std::map<std::string, long long> word_counts;
  for (const auto& doc : corpus) {
    for (auto& w : normalize_words(doc)) ++word_counts[w];
  }
  if (word_counts.empty()) return Vocab();

  struct Word {
    std::vector<std::string> symbols;
    long long count;
  };
  std::vector<Word> words;
  std::map<std::string, long long> chars;
  std::map<std::string, long long> continuation;
  for (const auto& [w, count] : word_counts) {
    Word word{split_chars(w), count};
    for (std::size_t i = 0; i < word.symbols.size(); ++i) {
      chars[word.symbols[i]] += count;
      if (i > 0) {
        word.symbols[i] = std::string(kContinuationPrefix) + word.symbols[i];
        continuation[word.symbols[i]] += count;
      }
    }
    words.push_back(std::move(word));
  }

  if (target_size < chars.size() + 1) {
    throw std::invalid_argument("target below alphabet size (" +
                                std::to_string(chars.size() + 1) + " needed)");
  }

  std::vector<std::string> pieces;
  std::unordered_map<std::string, bool> have;
  for (const auto& [c, n] : chars) {
    pieces.push_back(c);
    have[c] = true;
  }
  auto full = [&] { return pieces.size() + 1 >= target_size; };

  std::vector<std::pair<std::string, long long>> units(continuation.begin(),
                                                       continuation.end());
  std::stable_sort(units.begin(), units.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [unit, n] : units) {
    if (full()) break;
    pieces.push_back(unit);
    have[unit] = true;
  }

  // Merge loop over interned symbol ids.
  std::vector<std::string> symbol_names;
  std::unordered_map<std::string, int> symbol_ids;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = symbol_ids.emplace(s, static_cast<int>(symbol_names.size()));
    if (inserted) symbol_names.push_back(s);
    return it->second;
  };
  std::vector<std::vector<int>> seqs;
  seqs.reserve(words.size());
  for (const Word& w : words) {
    std::vector<int> seq;
    for (const auto& sym : w.symbols) seq.push_back(intern(sym));
    seqs.push_back(std::move(seq));
  }
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };

  while (!full()) {
    std::unordered_map<std::uint64_t, long long> pair_counts;
    for (std::size_t w = 0; w < seqs.size(); ++w) {
      const auto& seq = seqs[w];
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        pair_counts[key(seq[i], seq[i + 1])] += words[w].count;
      }
    }
    if (pair_counts.empty()) break;
    // Highest count wins; ties go to the lexicographically smallest pair.
    std::uint64_t best = 0;
    long long best_count = -1;
    for (const auto& [k, n] : pair_counts) {
      if (n < best_count) continue;
      if (n > best_count) {
        best = k;
        best_count = n;
        continue;
      }
      const auto& l = symbol_names[k >> 32];
      const auto& r = symbol_names[k & 0xffffffffu];
      const auto& bl = symbol_names[best >> 32];
      const auto& br = symbol_names[best & 0xffffffffu];
      if (std::tie(l, r) < std::tie(bl, br)) best = k;
    }
    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xffffffffu);
    const std::string merged =
        symbol_names[left] + strip_prefix(symbol_names[right]);
    const int merged_id = intern(merged);
    for (auto& seq : seqs) {
      std::size_t out = 0;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i + 1 < seq.size() && seq[i] == left && seq[i + 1] == right) {
          seq[out++] = merged_id;
          ++i;
        } else {
          seq[out++] = seq[i];
        }
      }
      seq.resize(out);
    }
    if (!have[merged]) {
      have[merged] = true;
      pieces.push_back(merged);
    }
  }
  return Vocab(std::move(pieces));
}

std::vector<std::string> tokenize_word(std::string_view word, const Vocab& vocab) {
  const auto chars = split_chars(word);
  if (chars.empty()) return {};
  if (chars.size() > kMaxWordChars) return {std::string(kUnknownPiece)};
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < chars.size()) {
    std::string found;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = start > 0 ? std::string(kContinuationPrefix) : "";
      for (std::size_t k = start; k < end; ++k) candidate += chars[k];
      if (vocab.contains(candidate)) {
        found = std::move(candidate);
        break;
      }
    }
    if (found.empty()) return {std::string(kUnknownPiece)};
    out.push_back(std::move(found));
    start = end;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const Vocab& vocab) {
  std::vector<std::string> out;
  for (const auto& w : normalize_words(text)) {
    auto pieces = tokenize_word(w, vocab);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()),
               std::make_move_iterator(pieces.end()));
  }
  return out;
}

// ---------------------------------------------------------------- URLs

UrlParts split_url(std::string_view url) {
  std::string s(url);
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  s = s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
  if (s.find_first_of(" \t\r\n") != std::string::npos) return {};

  std::string_view rest = s;
  if (auto pos = rest.find("://"); pos != std::string_view::npos) {
    const auto scheme = rest.substr(0, pos);
    if (scheme.empty() ||
        !std::all_of(scheme.begin(), scheme.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '+' ||
                 c == '-' || c == '.';
        })) {
      return {};
    }
    rest.remove_prefix(pos + 3);
  } else if (rest.starts_with("//")) {
    rest.remove_prefix(2);
  }

  const auto host_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, host_end);
  std::string_view tail =
      host_end == std::string_view::npos ? std::string_view{} : rest.substr(host_end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  if (auto colon = authority.find(':'); colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    if (!std::all_of(port.begin(), port.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
      return {};
    }
    authority = authority.substr(0, colon);
  }

  std::string host;
  for (char c : authority) {
    host.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (host.empty() || host.find('.') == std::string::npos || host.front() == '.' ||
      host.back() == '.' || host.find("..") != std::string::npos) {
    return {};
  }
  for (char c : host) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
          c == '.')) {
      return {};
    }
  }
  if (host.starts_with("www.")) host.erase(0, 4);

  UrlParts parts;
  parts.host = std::move(host);
  if (!tail.empty() && tail.front() == '/') {
    parts.path = std::string(tail.substr(0, tail.find_first_of("?#")));
  }
  return parts;
}

std::string extract_domain(std::string_view url) { return split_url(url).host; }

std::string url_text(std::string_view url, bool include_domain) {
  UrlParts parts = split_url(url);
  if (parts.host.empty()) return std::string(url);
  if (!include_domain) return parts.path;
  return parts.host + " " + parts.path;
}

// ---------------------------------------------------------------- embeddings

void EmbeddingTable::set(const std::string& piece, std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw std::invalid_argument("embedding for '" + piece + "' has length " +
                                std::to_string(vec.size()) + ", expected " +
                                std::to_string(dim_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite embedding value for '" + piece + "'");
    }
  }
  if (auto it = index_.find(piece); it != index_.end()) {
    std::copy(vec.begin(), vec.end(), values_.begin() + it->second * dim_);
    return;
  }
  index_.emplace(piece, pieces_.size());
  pieces_.push_back(piece);
  values_.insert(values_.end(), vec.begin(), vec.end());
}

std::span<const double> EmbeddingTable::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return {};
  return std::span<const double>(values_).subspan(it->second * dim_, dim_);
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings file " + path);
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    out << pieces_[i];
    for (std::size_t d = 0; d < dim_; ++d) {
      out << ' ' << format_double(values_[i * dim_ + d]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing embeddings file " + path);
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t default_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings file " + path);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string piece;
    if (!(fields >> piece)) continue;
    std::vector<double> vec;
    std::string tok;
    while (fields >> tok) {
      double v = 0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() ||
          !std::isfinite(v)) {
        throw std::runtime_error(path + ": bad number '" + tok + "' at line " +
                                 std::to_string(lineno));
      }
      vec.push_back(v);
    }
    if (rows.empty()) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw std::runtime_error(path + ": inconsistent vector length at line " +
                               std::to_string(lineno) + " (expected " +
                               std::to_string(dim) + ", got " +
                               std::to_string(vec.size()) + ")");
    }
    rows.emplace_back(std::move(piece), std::move(vec));
  }
  EmbeddingTable table(rows.empty() ? default_dim : dim);
  for (const auto& [piece, vec] : rows) table.set(piece, vec);
  return table;
}

EmbeddingTraining train_embeddings(
    std::span<const std::vector<std::string>> corpus,
    const EmbeddingParams& params) {
  if (params.dim == 0) throw std::invalid_argument("embedding dim must be >= 1");
  if (params.window < 1 || params.negatives < 0 || params.epochs < 1) {
    throw std::invalid_argument("invalid embedding training parameters");
  }
  std::map<std::string, long long> counts;
  std::size_t total_tokens = 0;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) {
      ++counts[t];
      ++total_tokens;
    }
  }
  if (total_tokens == 0) throw std::invalid_argument("empty embedding corpus");

  // Most frequent first; std::map order breaks ties.
  std::vector<std::pair<std::string, long long>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < order.size(); ++i) ids[order[i].first] = static_cast<int>(i);

  const std::size_t vocab = order.size();
  const std::size_t dim = params.dim;
  std::mt19937_64 rng(params.seed);

  std::vector<double> input(vocab * dim);
  std::vector<double> output(vocab * dim, 0.0);
  for (double& v : input) v = (uniform01(rng) - 0.5) / static_cast<double>(dim);

  std::vector<double> noise_cdf(vocab);
  double acc = 0;
  for (std::size_t i = 0; i < vocab; ++i) {
    acc += std::pow(static_cast<double>(order[i].second), 0.75);
    noise_cdf[i] = acc;
  }
  auto sample_noise = [&]() {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
    return static_cast<int>(std::min<std::size_t>(it - noise_cdf.begin(), vocab - 1));
  };

  std::vector<std::vector<int>> docs;
  docs.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<int> ids_doc;
    ids_doc.reserve(doc.size());
    for (const auto& t : doc) ids_doc.push_back(ids[t]);
    docs.push_back(std::move(ids_doc));
  }

  EmbeddingTraining result{EmbeddingTable(dim), {}};
  const double total_steps = static_cast<double>(total_tokens) * params.epochs;
  double step = 0;
  std::vector<double> grad(dim);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    double loss = 0;
    std::size_t updates = 0;
    for (const auto& doc : docs) {
      for (std::size_t i = 0; i < doc.size(); ++i, ++step) {
        const double lr =
            params.learning_rate * std::max(1e-4, 1.0 - step / total_steps);
        const int shrink = static_cast<int>(rng() % params.window);
        const int span = params.window - shrink;
        double* center = &input[doc[i] * dim];
        const std::size_t lo = i >= static_cast<std::size_t>(span) ? i - span : 0;
        const std::size_t hi = std::min(doc.size() - 1, i + span);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(grad.begin(), grad.end(), 0.0);
          for (int n = 0; n <= params.negatives; ++n) {
            int target;
            double label;
            if (n == 0) {
              target = doc[j];
              label = 1.0;
            } else {
              target = sample_noise();
              if (target == doc[j]) continue;
              label = 0.0;
            }
            double* ctx = &output[target * dim];
            double f = 0;
            for (std::size_t d = 0; d < dim; ++d) f += center[d] * ctx[d];
            const double sig = 1.0 / (1.0 + std::exp(-f));
            // -log(sigma(f)) for positives, -log(sigma(-f)) for negatives
            const double z = label > 0 ? f : -f;
            loss += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
            const double g = (label - sig) * lr;
            for (std::size_t d = 0; d < dim; ++d) {
              grad[d] += g * ctx[d];
              ctx[d] += g * center[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) center[d] += grad[d];
          ++updates;
        }
      }
    }
    result.epoch_loss.push_back(updates ? loss / static_cast<double>(updates) : 0.0);
  }

  for (std::size_t i = 0; i < vocab; ++i) {
    result.table.set(order[i].first,
                     std::span<const double>(input).subspan(i * dim, dim));
  }
  return result;
}

std::vector<double> embed_text(std::span<const std::string> pieces,
                               const EmbeddingTable& table) {
  std::vector<double> mean(table.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& p : pieces) {
    auto vec = table.find(p);
    if (vec.empty()) continue;
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += vec[d];
    ++n;
  }
  if (n > 0) {
    for (double& v : mean) v /= static_cast<double>(n);
  }
  return mean;
}

}  // namespace prodsearch

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prodsearch {

inline constexpr std::string_view kUnknownPiece = "[UNK]";
inline constexpr std::string_view kContinuationPrefix = "##";

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 (UTF-8 multibyte sequences) are kept as
/// word characters.
std::vector<std::string> normalize_words(std::string_view text);

/// Wordpiece vocabulary. Piece order is the learn order: "[UNK]", the bare
/// single characters, then learned pieces.
class Vocab {
 public:
  Vocab();  // only "[UNK]"
  explicit Vocab(std::vector<std::string> pieces);

  bool contains(std::string_view piece) const;
  /// Index of a piece, or -1 when absent.
  int id(std::string_view piece) const;
  const std::string& piece(int id) const { return pieces_.at(id); }
  const std::vector<std::string>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  int unk_id() const { return 0; }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
};

/// Learns a vocabulary by frequency-driven pair merging. The result holds
/// "[UNK]", every observed character, continuation characters ("##c") in
/// frequency order, then merged pieces until target_size is reached or no
/// pair remains. Ties are broken lexicographically, so the output is a pure
/// function of the corpus; seed is accepted for interface stability.
Vocab learn_vocab(std::span<const std::string> corpus, std::size_t target_size,
                  std::uint64_t seed = 0);

/// Wordpiece segmentation: greedy longest-match-first per normalized word.
/// A word that cannot be fully segmented becomes a single "[UNK]".
std::vector<std::string> tokenize(std::string_view text, const Vocab& vocab);
std::vector<std::string> tokenize_word(std::string_view word, const Vocab& vocab);

struct UrlParts {
  std::string host;  // lowercased, "www." stripped; empty if unparseable
  std::string path;  // path only, no query or fragment
};

UrlParts split_url(std::string_view url);

/// Lowercased host with scheme, port, path and query stripped and a leading
/// "www." removed. Returns "" for anything that does not look like a URL.
std::string extract_domain(std::string_view url);

/// Text used when tokenizing a clicked URL: host + path, or the path alone
/// when include_domain is false.
std::string url_text(std::string_view url, bool include_domain);

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return pieces_.size(); }
  bool empty() const { return pieces_.empty(); }

  /// Inserts or replaces. Throws if the vector length differs from dim or a
  /// value is not finite.
  void set(const std::string& piece, std::span<const double> vec);
  /// Empty span when absent.
  std::span<const double> find(std::string_view piece) const;
  const std::vector<std::string>& pieces() const { return pieces_; }

  void save(const std::string& path) const;

 private:
  std::size_t dim_;
  std::vector<std::string> pieces_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads "piece v1 ... vd" lines. An empty file yields an empty table with
/// dimension default_dim. Rows of inconsistent length raise an error naming
/// the line.
EmbeddingTable load_embeddings(const std::string& path, std::size_t default_dim);

struct EmbeddingParams {
  std::size_t dim = 50;
  int window = 4;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;  // linearly decayed to ~0
  std::uint64_t seed = 1;
};

struct EmbeddingTraining {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean negative-sampling loss per update
};

/// Skip-gram with negative sampling over tokenized documents, single worker.
EmbeddingTraining train_embeddings(
    std::span<const std::vector<std::string>> corpus,
    const EmbeddingParams& params);

/// Mean of the vectors of in-table pieces; zero vector if none are present.
std::vector<double> embed_text(std::span<const std::string> pieces,
                               const EmbeddingTable& table);

}  // namespace prodsearch

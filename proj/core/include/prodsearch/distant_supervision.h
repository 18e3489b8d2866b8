#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prodsearch/log_model.h"

namespace prodsearch {

enum class HeuristicKind {
  ProductList = 0,
  ProductAds = 1,
  ProductCategories = 2,
  AdsAndCategories = 3,
};

inline constexpr std::array<HeuristicKind, 4> kAllHeuristics = {
    HeuristicKind::ProductList, HeuristicKind::ProductAds,
    HeuristicKind::ProductCategories, HeuristicKind::AdsAndCategories};

std::string_view to_string(HeuristicKind kind);
std::optional<HeuristicKind> parse_heuristic(std::string_view text);

/// Category names and best-seller product names, lowercase and deduplicated.
struct ResourceLists {
  std::vector<std::string> categories;
  std::vector<std::string> products;
};

/// Reads one entry per line; '#' starts a comment. Entries are lowercased,
/// trimmed and deduplicated in first-seen order.
std::vector<std::string> load_resource_list(const std::string& path);
std::vector<std::string> normalize_resource_list(std::span<const std::string> raw);

/// Bundled defaults: a department-style category list and ten best-selling
/// products.
ResourceLists default_resources();

/// True when the phrase, split into normalized words, occurs as a contiguous
/// run inside `tokens`.
bool contains_phrase(std::span<const std::string> tokens,
                     std::span<const std::string> phrase);

bool apply_heuristic(const QueryRecord& record, HeuristicKind kind,
                     const ResourceLists& res);

struct WeakLabeledSet {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  HeuristicKind heuristic = HeuristicKind::AdsAndCategories;
  std::uint64_t seed = 0;
};

/// Uniform sample without replacement of n_pos satisfying and n_neg
/// non-satisfying records. Throws std::invalid_argument when a stratum is
/// too small, reporting what is available.
WeakLabeledSet build_weak_set(std::span<const QueryRecord> records,
                              HeuristicKind kind, const ResourceLists& res,
                              std::size_t n_pos, std::size_t n_neg,
                              std::uint64_t seed);

struct BinaryScore {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;  // fractions
};

/// Fills the ratio fields from the confusion counts (0 on a zero denominator).
BinaryScore score_confusion(long tp, long fp, long fn, long tn);

struct GoldQuery {
  QueryRecord record;
  bool is_product = false;
};

struct HeuristicScore {
  HeuristicKind kind;
  BinaryScore score;
};

/// Gold file: log-format lines carrying an extra boolean "is_product".
/// Throws std::runtime_error naming the first bad line.
std::vector<GoldQuery> load_gold(const std::string& path);

std::vector<HeuristicScore> evaluate_heuristics(std::span<const GoldQuery> gold,
                                                const ResourceLists& res);

}  // namespace prodsearch

#pragma once

// Reference computations written independently of the library code paths
// they check. Shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace prodsearch::oracle {

/// Fleiss kappa from pairwise rater agreement: P_i is the share of ordered
/// rater pairs that agree on item i, P_e the sum of squared category shares.
inline double fleiss_by_pairs(const std::vector<std::vector<int>>& table, int raters) {
  double p_bar = 0;
  std::vector<double> totals(table.front().size(), 0.0);
  for (const auto& row : table) {
    std::vector<int> ratings;
    for (std::size_t j = 0; j < row.size(); ++j) {
      for (int r = 0; r < row[j]; ++r) ratings.push_back(static_cast<int>(j));
      totals[j] += row[j];
    }
    int agree = 0;
    for (int a = 0; a < raters; ++a) {
      for (int b = 0; b < raters; ++b) {
        if (a != b && ratings[a] == ratings[b]) ++agree;
      }
    }
    p_bar += static_cast<double>(agree) / (raters * (raters - 1));
  }
  p_bar /= static_cast<double>(table.size());
  const double all = static_cast<double>(table.size()) * raters;
  double p_e = 0;
  for (double t : totals) p_e += (t / all) * (t / all);
  return (p_bar - p_e) / (1 - p_e);
}

/// Greedy longest-prefix segmentation over a plain set of pieces. Returns
/// an empty vector when the word cannot be segmented.
inline std::vector<std::string> greedy_segment(const std::string& word,
                                               const std::set<std::string>& pieces) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t best = 0;
    for (std::size_t len = 1; start + len <= word.size(); ++len) {
      const std::string cand = (start ? "##" : "") + word.substr(start, len);
      if (pieces.count(cand)) best = len;
    }
    if (best == 0) return {};
    out.push_back((start ? "##" : "") + word.substr(start, best));
    start += best;
  }
  return out;
}

/// Concatenates pieces with continuation prefixes removed.
inline std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string s;
  for (const auto& p : pieces) s += p.rfind("##", 0) == 0 ? p.substr(2) : p;
  return s;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("prodsearch_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? path_.string() : (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace prodsearch::oracle

// Tree learners: Gini random forest and AdaBoost over decision stumps.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "learners_internal.h"
#include "sampling.h"

namespace prodsearch::detail {
namespace {

/// A threshold strictly between lo and hi such that lo <= t < hi.
double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2;
  return mid < hi ? mid : lo;
}

double gini(std::span<const long> counts, long total) {
  if (total == 0) return 0;
  double s = 0;
  for (long c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    s += p * p;
  }
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, std::size_t classes, int max_depth,
              std::size_t max_features, std::mt19937_64& rng)
      : x_(x), y_(y), classes_(classes), max_depth_(max_depth),
        max_features_(max_features), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<long> counts(classes_, 0);
    for (std::size_t r : rows) ++counts[y_[r]];
    tree.nodes[id].label = majority(counts);

    const bool pure = std::count_if(counts.begin(), counts.end(),
                                    [](long c) { return c > 0; }) <= 1;
    if (pure || rows.size() < 2 || (max_depth_ > 0 && depth >= max_depth_)) return id;

    std::vector<int> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    shuffle_in_place(features, rng_);

    const long n = static_cast<long>(rows.size());
    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0;
    std::vector<long> left(classes_), right(classes_);
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
      // Look at max_features candidates, but keep going until some valid
      // split is found.
      if (fi >= max_features_ && best_feature >= 0) break;
      const int f = features[fi];
      std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        return x_(a, f) < x_(b, f);
      });
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (long k = 0; k + 1 < n; ++k) {
        const int label = y_[rows[k]];
        ++left[label];
        --right[label];
        const double v = x_(rows[k], f), next = x_(rows[k + 1], f);
        if (!(v < next)) continue;
        const long nl = k + 1, nr = n - nl;
        const double impurity =
            (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
            static_cast<double>(n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = split_point(v, next);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      (x_(r, best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = grow(tree, std::move(lrows), depth + 1);
    tree.nodes[id].left = l;
    const int r = grow(tree, std::move(rrows), depth + 1);
    tree.nodes[id].right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t classes_;
  int max_depth_;
  std::size_t max_features_;
  std::mt19937_64& rng_;
};

}  // namespace

ForestParams train_forest(const Matrix& x, std::span<const int> y, std::size_t classes,
                          const Hyperparameters& hyper, std::mt19937_64& rng) {
  if (hyper.forest_trees < 1) throw std::invalid_argument("forest needs >= 1 tree");
  const std::size_t n = x.rows();
  std::size_t mtry = hyper.forest_max_features > 0
                         ? static_cast<std::size_t>(hyper.forest_max_features)
                         : static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols())));
  mtry = std::clamp<std::size_t>(mtry, 1, std::max<std::size_t>(1, x.cols()));
  TreeBuilder builder(x, y, classes, hyper.forest_max_depth, mtry, rng);
  ForestParams out;
  for (int t = 0; t < hyper.forest_trees; ++t) {
    std::vector<std::size_t> rows(n);
    if (hyper.forest_bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    out.trees.push_back(builder.build(std::move(rows)));
  }
  return out;
}

BoostParams train_adaboost(const Matrix& x, std::span<const int> y, std::size_t classes,
                           const Hyperparameters& hyper, TrainingTrace* trace) {
  if (hyper.boost_rounds < 1) throw std::invalid_argument("AdaBoost needs >= 1 round");
  const std::size_t n = x.rows(), d = x.cols();

  std::vector<std::vector<std::size_t>> sorted(d);
  for (std::size_t f = 0; f < d; ++f) {
    sorted[f].resize(n);
    std::iota(sorted[f].begin(), sorted[f].end(), std::size_t{0});
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  }

  BoostParams out;
  for (const auto& t : one_vs_rest_targets(y, classes)) {
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<Stump> machine;
    for (int round = 0; round < hyper.boost_rounds; ++round) {
      double total_pos = 0, total_neg = 0;
      for (std::size_t i = 0; i < n; ++i) (t[i] > 0 ? total_pos : total_neg) += w[i];

      Stump best;
      double best_err = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < d; ++f) {
        const auto& order = sorted[f];
        // Threshold below every value: all rows go right.
        auto consider = [&](double left_pos, double left_neg, double threshold) {
          const double err_plus = left_pos + (total_neg - left_neg);
          const double err_minus = left_neg + (total_pos - left_pos);
          if (err_plus < best_err) {
            best_err = err_plus;
            best = {static_cast<int>(f), threshold, 1, 0};
          }
          if (err_minus < best_err) {
            best_err = err_minus;
            best = {static_cast<int>(f), threshold, -1, 0};
          }
        };
        consider(0, 0, x(order.front(), f) - 1.0);
        double lp = 0, ln = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
          const std::size_t i = order[k];
          (t[i] > 0 ? lp : ln) += w[i];
          const double v = x(i, f), next = x(order[k + 1], f);
          if (v < next) consider(lp, ln, split_point(v, next));
        }
      }
      best_err = std::max(0.0, best_err);
      if (trace) trace->round_error.push_back(best_err);
      if (best_err >= 0.5) break;
      const double err = std::max(best_err, 1e-10);
      best.alpha = 0.5 * std::log((1.0 - err) / err);
      machine.push_back(best);
      if (best_err <= 1e-10) break;

      double norm = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const int h = x(i, best.feature) > best.threshold ? best.polarity : -best.polarity;
        w[i] *= std::exp(-best.alpha * t[i] * h);
        norm += w[i];
      }
      for (double& v : w) v /= norm;
    }
    out.machines.push_back(std::move(machine));
  }
  return out;
}

}  // namespace prodsearch::detail

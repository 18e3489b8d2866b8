#include "prodsearch/learners.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "learners_internal.h"
#include "sampling.h"

namespace prodsearch {
namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "LogReg", "LinearSVM", "RbfSVM", "KNN", "RandomForest", "AdaBoost", "MLP"};

bool uses_standardizer(ModelKind kind) {
  return kind != ModelKind::RandomForest && kind != ModelKind::AdaBoost;
}

bool margin_based(ModelKind kind) {
  return kind == ModelKind::LogReg || kind == ModelKind::LinearSVM ||
         kind == ModelKind::RbfSVM || kind == ModelKind::AdaBoost ||
         kind == ModelKind::MLP;
}

std::vector<double> linear_scores(const LinearParams& p, std::span<const double> x) {
  std::vector<double> s(p.weights.rows());
  for (std::size_t r = 0; r < p.weights.rows(); ++r) {
    const auto w = p.weights.row(r);
    double acc = p.bias[r];
    for (std::size_t d = 0; d < w.size(); ++d) acc += w[d] * x[d];
    s[r] = acc;
  }
  return s;
}

int predict_knn(const KnnParams& p, std::size_t classes, std::span<const double> x) {
  const std::size_t n = p.points.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = p.points.row(i);
    double d2 = 0;
    for (std::size_t d = 0; d < row.size(); ++d) {
      const double diff = row[d] - x[d];
      d2 += diff * diff;
    }
    dist[i] = {d2, i};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(p.k), n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  std::vector<long> votes(classes, 0);
  for (std::size_t i = 0; i < k; ++i) ++votes[p.labels[dist[i].second]];
  return detail::majority(votes);
}

}  // namespace

namespace detail {

int pick_class(std::span<const double> scores) {
  if (scores.size() == 1) return scores[0] > 0 ? 1 : 0;
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  }
  return best;
}

int majority(std::span<const long> votes) {
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = static_cast<int>(c);
  }
  return best;
}

int predict_tree(const DecisionTree& tree, std::span<const double> x) {
  int node = 0;
  while (tree.nodes[node].feature >= 0) {
    const TreeNode& n = tree.nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[node].label;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

std::vector<std::vector<int>> one_vs_rest_targets(std::span<const int> y,
                                                  std::size_t classes) {
  std::vector<std::vector<int>> out;
  if (classes == 2) {
    std::vector<int> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 1 ? 1 : -1;
    out.push_back(std::move(t));
    return out;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<int> t(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      t[i] = y[i] == static_cast<int>(c) ? 1 : -1;
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

std::string_view to_string(ModelKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ModelKind>(i);
  }
  return std::nullopt;
}

void Dataset::validate() const {
  if (features.rows() == 0) throw std::invalid_argument("dataset is empty");
  if (labels.size() != features.rows()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.rows()) +
                                " rows but " + std::to_string(labels.size()) +
                                " labels");
  }
  if (class_names.empty()) throw std::invalid_argument("dataset has no classes");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= class_names.size()) {
      throw std::invalid_argument("label " + std::to_string(l) + " out of range");
    }
  }
  for (std::size_t i = 0; i < features.data().size(); ++i) {
    if (!std::isfinite(features.data()[i])) {
      throw std::invalid_argument("non-finite feature at row " +
                                  std::to_string(i / std::max<std::size_t>(1, features.cols())));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.class_names = class_names;
  out.features = Matrix(0, features.cols());
  out.features.data().reserve(rows.size() * features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    out.features.append_row(features.row(r));
    out.labels.push_back(labels[r]);
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows(), d = x.cols();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  if (n == 0) {
    s.stddev.assign(d, 1.0);
    return s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - s.mean[j];
      s.stddev[j] += diff * diff;
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw std::invalid_argument("standardizer expects " + std::to_string(mean.size()) +
                                " columns, got " + std::to_string(x.cols()));
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = (row[j] - mean[j]) / stddev[j];
    }
  }
  return out;
}

TrainedModel train(ModelKind kind, const Dataset& data, const Hyperparameters& hyper,
                   std::uint64_t seed, TrainingTrace* trace) {
  data.validate();
  const std::size_t classes = data.num_classes();
  if (margin_based(kind)) {
    const int first = data.labels.front();
    const bool single = std::all_of(data.labels.begin(), data.labels.end(),
                                    [first](int l) { return l == first; });
    if (single || classes < 2) {
      throw std::invalid_argument(std::string(to_string(kind)) +
                                  " needs at least two classes in the training set");
    }
  }

  TrainedModel model;
  model.kind = kind;
  model.class_names = data.class_names;
  model.feature_dim = data.features.cols();
  Matrix x = data.features;
  if (uses_standardizer(kind)) {
    model.standardizer = Standardizer::fit(data.features);
    x = model.standardizer->apply(data.features);
  }
  std::mt19937_64 rng(seed);
  const auto& y = data.labels;

  switch (kind) {
    case ModelKind::LogReg:
      model.params = detail::train_logreg(x, y, classes, hyper, trace);
      break;
    case ModelKind::LinearSVM:
      model.params = detail::train_linear_svm(x, y, classes, hyper, rng);
      break;
    case ModelKind::RbfSVM:
      model.params = detail::train_rbf_svm(x, y, classes, hyper);
      break;
    case ModelKind::KNN: {
      if (hyper.knn_k < 1) throw std::invalid_argument("knn k must be >= 1");
      model.params = KnnParams{hyper.knn_k, std::move(x), y};
      break;
    }
    case ModelKind::RandomForest:
      model.params = detail::train_forest(x, y, classes, hyper, rng);
      break;
    case ModelKind::AdaBoost:
      model.params = detail::train_adaboost(x, y, classes, hyper, trace);
      break;
    case ModelKind::MLP:
      model.params = detail::train_mlp(x, y, classes, hyper, rng, trace);
      break;
  }
  return model;
}

std::vector<int> predict(const TrainedModel& model, const Matrix& features) {
  if (features.cols() != model.feature_dim) {
    throw std::invalid_argument("expected D=" + std::to_string(model.feature_dim) +
                                ", got " + std::to_string(features.cols()));
  }
  const Matrix x = model.standardizer ? model.standardizer->apply(features) : features;
  const std::size_t classes = model.class_names.size();
  std::vector<int> out(x.rows());

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const auto row = x.row(i);
          if constexpr (std::is_same_v<P, LinearParams>) {
            out[i] = detail::pick_class(linear_scores(p, row));
          } else if constexpr (std::is_same_v<P, RbfParams>) {
            std::vector<double> scores;
            for (const KernelMachine& m : p.machines) {
              double s = m.bias;
              for (std::size_t j = 0; j < m.support.rows(); ++j) {
                s += m.coef[j] * detail::rbf_kernel(m.support.row(j), row, p.gamma);
              }
              scores.push_back(s);
            }
            out[i] = detail::pick_class(scores);
          } else if constexpr (std::is_same_v<P, KnnParams>) {
            out[i] = predict_knn(p, classes, row);
          } else if constexpr (std::is_same_v<P, ForestParams>) {
            std::vector<long> votes(classes, 0);
            for (const DecisionTree& t : p.trees) ++votes[detail::predict_tree(t, row)];
            out[i] = detail::majority(votes);
          } else if constexpr (std::is_same_v<P, BoostParams>) {
            std::vector<double> scores;
            for (const auto& machine : p.machines) {
              double s = 0;
              for (const Stump& st : machine) {
                s += st.alpha * (row[st.feature] > st.threshold ? st.polarity
                                                                : -st.polarity);
              }
              scores.push_back(s);
            }
            out[i] = detail::pick_class(scores);
          } else if constexpr (std::is_same_v<P, MlpParams>) {
            const std::size_t hidden = p.w1.cols();
            std::vector<double> h(p.b1);
            for (std::size_t d = 0; d < row.size(); ++d) {
              const auto w = p.w1.row(d);
              for (std::size_t j = 0; j < hidden; ++j) h[j] += row[d] * w[j];
            }
            for (double& v : h) v = v > 0 ? v : 0;
            std::vector<double> logits(p.w2.rows());
            for (std::size_t c = 0; c < logits.size(); ++c) {
              const auto w = p.w2.row(c);
              double a = p.b2[c];
              for (std::size_t j = 0; j < hidden; ++j) a += w[j] * h[j];
              logits[c] = a;
            }
            int best = 0;
            for (std::size_t c = 1; c < logits.size(); ++c) {
              if (logits[c] > logits[best]) best = static_cast<int>(c);
            }
            out[i] = best;
          }
        }
      },
      model.params);
  return out;
}

double EvaluationReport::macro_f1() const {
  if (per_class.empty()) return 0;
  double s = 0;
  for (const auto& m : per_class) s += m.f1;
  return s / static_cast<double>(per_class.size());
}

long EvaluationReport::total() const {
  long n = 0;
  for (const auto& row : confusion) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

EvaluationReport evaluate(std::span<const int> predicted, std::span<const int> gold,
                          std::size_t num_classes) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("prediction count " + std::to_string(predicted.size()) +
                                " does not match gold count " +
                                std::to_string(gold.size()));
  }
  EvaluationReport r;
  r.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || predicted[i] < 0 ||
        static_cast<std::size_t>(gold[i]) >= num_classes ||
        static_cast<std::size_t>(predicted[i]) >= num_classes) {
      throw std::invalid_argument("label out of range at position " + std::to_string(i));
    }
    ++r.confusion[gold[i]][predicted[i]];
  }
  long trace = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    trace += r.confusion[c][c];
    long row = 0, col = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    ClassMetrics m;
    const double tp = static_cast<double>(r.confusion[c][c]);
    m.precision = col > 0 ? 100.0 * tp / col : 0.0;
    m.recall = row > 0 ? 100.0 * tp / row : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    r.per_class.push_back(m);
  }
  r.accuracy = gold.empty() ? 0.0 : 100.0 * trace / static_cast<double>(gold.size());
  return r;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t num_classes, int k,
                                                       std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (auto& members : by_class) {
    detail::shuffle_in_place(members, rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      folds[(offset + j) % k].push_back(members[j]);
    }
    offset += members.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

EvaluationReport cross_validate_with(const Dataset& data, int k, std::uint64_t seed,
                                     const FoldTrainer& fit_predict) {
  data.validate();
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  const std::size_t classes = data.num_classes();
  std::vector<std::size_t> counts(classes, 0);
  for (int l : data.labels) ++counts[l];
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("class '" + data.class_names[c] + "' has " +
                                  std::to_string(counts[c]) + " examples, fewer than k=" +
                                  std::to_string(k));
    }
  }
  const auto folds = stratified_folds(data.labels, classes, k, seed);
  std::vector<int> pooled(data.labels.size(), -1);
  std::vector<char> held(data.labels.size());
  for (int f = 0; f < k; ++f) {
    std::fill(held.begin(), held.end(), 0);
    for (std::size_t i : folds[f]) held[i] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < held.size(); ++i) {
      if (!held[i]) train_rows.push_back(i);
    }
    const Dataset train_set = data.subset(train_rows);
    const Dataset test_set = data.subset(folds[f]);
    const auto pred = fit_predict(train_set, test_set.features, f);
    if (pred.size() != folds[f].size()) {
      throw std::logic_error("fold predictor returned wrong number of labels");
    }
    for (std::size_t j = 0; j < pred.size(); ++j) pooled[folds[f][j]] = pred[j];
  }
  EvaluationReport report = evaluate(pooled, data.labels, classes);
  report.class_names = data.class_names;
  report.folds = k;
  return report;
}

EvaluationReport cross_validate(ModelKind kind, const Dataset& data, int k,
                                const Hyperparameters& hyper, std::uint64_t seed) {
  return cross_validate_with(
      data, k, seed, [&](const Dataset& train_set, const Matrix& test, int fold) {
        const TrainedModel m = train(kind, train_set, hyper, seed + 1000003ULL * (fold + 1));
        return predict(m, test);
      });
}

}  // namespace prodsearch

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prodsearch/matrix.h"

namespace prodsearch {

enum class ModelKind { LogReg, LinearSVM, RbfSVM, KNN, RandomForest, AdaBoost, MLP };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

struct Dataset {
  Matrix features;              // N x D
  std::vector<int> labels;      // class ids in [0, C)
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  /// Throws std::invalid_argument on non-finite features, out-of-range
  /// labels, a row/label count mismatch or an empty set.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Training settings. Defaults are the documented desk-scale settings.
struct Hyperparameters {
  // LogReg: full-batch gradient descent.
  double logreg_lambda = 1e-4;
  double logreg_learning_rate = 0.1;
  int logreg_epochs = 500;
  // LinearSVM: Pegasos SGD on hinge loss, one-vs-rest.
  double svm_lambda = 1e-4;
  int svm_epochs = 20;
  // RbfSVM: SMO, one-vs-rest. gamma <= 0 means 1/D.
  double rbf_c = 1.0;
  double rbf_gamma = 0.0;
  double rbf_tolerance = 1e-3;
  long rbf_max_iterations = 1000000;
  // KNN, Euclidean.
  int knn_k = 5;
  // RandomForest, Gini. max_depth <= 0 means unbounded; max_features <= 0
  // means floor(sqrt(D)).
  int forest_trees = 100;
  int forest_max_depth = 12;
  int forest_max_features = 0;
  bool forest_bootstrap = true;
  // AdaBoost with depth-1 stumps, one-vs-rest.
  int boost_rounds = 50;
  // MLP: one ReLU hidden layer, softmax output, cross-entropy, mini-batch SGD.
  int mlp_hidden = 100;
  double mlp_learning_rate = 0.01;
  int mlp_epochs = 200;
  int mlp_batch = 32;
};

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // > 0; constant columns get 1

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

/// One row per decision function: a single row for two classes (positive
/// score means class 1), otherwise one row per class.
struct LinearParams {
  Matrix weights;
  std::vector<double> bias;
};

struct KernelMachine {
  Matrix support;              // support vectors (standardized space)
  std::vector<double> coef;    // alpha_i * y_i
  double bias = 0;
};

struct RbfParams {
  double gamma = 0;
  std::vector<KernelMachine> machines;  // 1 for two classes, else C
};

struct KnnParams {
  int k = 5;
  Matrix points;
  std::vector<int> labels;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  int label = 0;     // leaf prediction
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0
};

struct ForestParams {
  std::vector<DecisionTree> trees;
};

/// h(x) = polarity if x[feature] > threshold, else -polarity.
struct Stump {
  int feature = 0;
  double threshold = 0;
  int polarity = 1;
  double alpha = 0;
};

struct BoostParams {
  std::vector<std::vector<Stump>> machines;  // 1 for two classes, else C
};

struct MlpParams {
  Matrix w1;  // D x H, input-major
  std::vector<double> b1;
  Matrix w2;  // C x H
  std::vector<double> b2;
};

using ModelParams = std::variant<LinearParams, RbfParams, KnnParams, ForestParams,
                                 BoostParams, MlpParams>;

struct TrainedModel {
  ModelKind kind = ModelKind::LogReg;
  std::vector<std::string> class_names;
  std::size_t feature_dim = 0;
  std::optional<Standardizer> standardizer;
  ModelParams params;
};

/// Optional diagnostics collected during training.
struct TrainingTrace {
  std::vector<double> epoch_loss;   // LogReg (full batch) and MLP
  std::vector<double> round_error;  // AdaBoost weighted stump errors, all machines
};

/// Deterministic given seed. The standardizer (kernel, distance, linear and
/// MLP models) is fit on `data` only and stored in the model.
TrainedModel train(ModelKind kind, const Dataset& data,
                   const Hyperparameters& hyper = {}, std::uint64_t seed = 0,
                   TrainingTrace* trace = nullptr);

/// One class id per row. Throws on a feature dimension mismatch.
std::vector<int> predict(const TrainedModel& model, const Matrix& features);

struct ClassMetrics {
  double precision = 0;  // percent
  double recall = 0;
  double f1 = 0;
};

struct EvaluationReport {
  double accuracy = 0;  // percent
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<long>> confusion;  // [gold][predicted]
  int folds = 0;

  double macro_f1() const;  // percent
  long total() const;
};

EvaluationReport evaluate(std::span<const int> predicted, std::span<const int> gold,
                          std::size_t num_classes);

/// Stratified k-fold assignment: for each fold, the row indices it holds out.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t num_classes, int k,
                                                       std::uint64_t seed);

using FoldTrainer =
    std::function<std::vector<int>(const Dataset& train, const Matrix& test, int fold)>;

/// Runs k stratified folds and pools the held-out predictions into one
/// confusion matrix.
EvaluationReport cross_validate_with(const Dataset& data, int k, std::uint64_t seed,
                                     const FoldTrainer& fit_predict);
EvaluationReport cross_validate(ModelKind kind, const Dataset& data, int k,
                                const Hyperparameters& hyper, std::uint64_t seed);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

namespace mlp {

/// Mean cross-entropy of the network on (x, labels). When grad is non-null it
/// receives d(loss)/d(params) with the same shapes as params.
double loss_and_gradient(const MlpParams& params, const Matrix& x,
                         std::span<const int> labels, MlpParams* grad);

MlpParams init(std::size_t input_dim, std::size_t hidden, std::size_t classes,
               std::uint64_t seed);

}  // namespace mlp

}  // namespace prodsearch

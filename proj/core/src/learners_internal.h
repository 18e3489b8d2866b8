#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "prodsearch/learners.h"

namespace prodsearch::detail {

// Every trainer receives features already standardized when the kind uses a
// standardizer, labels in [0, C), and C >= 2 unless noted.

LinearParams train_logreg(const Matrix& x, std::span<const int> y, std::size_t classes,
                          const Hyperparameters& hyper, TrainingTrace* trace);
LinearParams train_linear_svm(const Matrix& x, std::span<const int> y,
                              std::size_t classes, const Hyperparameters& hyper,
                              std::mt19937_64& rng);
RbfParams train_rbf_svm(const Matrix& x, std::span<const int> y, std::size_t classes,
                        const Hyperparameters& hyper);
ForestParams train_forest(const Matrix& x, std::span<const int> y, std::size_t classes,
                          const Hyperparameters& hyper, std::mt19937_64& rng);
BoostParams train_adaboost(const Matrix& x, std::span<const int> y,
                           std::size_t classes, const Hyperparameters& hyper,
                           TrainingTrace* trace);
MlpParams train_mlp(const Matrix& x, std::span<const int> y, std::size_t classes,
                    const Hyperparameters& hyper, std::mt19937_64& rng,
                    TrainingTrace* trace);

/// Argmax over decision scores; ties go to the smallest class id. A single
/// score means a binary machine where > 0 selects class 1.
int pick_class(std::span<const double> scores);

int predict_tree(const DecisionTree& tree, std::span<const double> x);
int majority(std::span<const long> votes);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Targets of the one-vs-rest sub-problems: a single +-1 vector (class 1
/// positive) for two classes, otherwise one per class.
std::vector<std::vector<int>> one_vs_rest_targets(std::span<const int> y,
                                                  std::size_t classes);

}  // namespace prodsearch::detail

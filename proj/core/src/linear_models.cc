// Linear models: multinomial logistic regression (full-batch gradient
// descent) and one-vs-rest Pegasos linear SVM.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "learners_internal.h"
#include "sampling.h"

namespace prodsearch::detail {
namespace {

struct SoftmaxState {
  Matrix w;                 // C x D
  std::vector<double> b;    // C
};

/// Regularized mean cross-entropy and its gradient.
double softmax_objective(const SoftmaxState& s, const Matrix& x, std::span<const int> y,
                         double lambda, SoftmaxState& grad) {
  const std::size_t n = x.rows(), d = x.cols(), c = s.w.rows();
  grad.w = Matrix(c, d);
  grad.b.assign(c, 0.0);
  std::vector<double> z(c);
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t k = 0; k < c; ++k) {
      const auto w = s.w.row(k);
      double a = s.b[k];
      for (std::size_t j = 0; j < d; ++j) a += w[j] * row[j];
      z[k] = a;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      denom += v;
    }
    loss += -std::log(z[y[i]] / denom);
    for (std::size_t k = 0; k < c; ++k) {
      const double g = z[k] / denom - (static_cast<int>(k) == y[i] ? 1.0 : 0.0);
      if (g == 0) continue;
      auto gw = grad.w.row(k);
      for (std::size_t j = 0; j < d; ++j) gw[j] += g * row[j];
      grad.b[k] += g;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double reg = 0;
  for (std::size_t k = 0; k < grad.w.data().size(); ++k) {
    const double wv = s.w.data()[k];
    grad.w.data()[k] = grad.w.data()[k] * inv_n + lambda * wv;
    reg += wv * wv;
  }
  for (double& g : grad.b) g *= inv_n;
  return loss * inv_n + 0.5 * lambda * reg;
}

}  // namespace

LinearParams train_logreg(const Matrix& x, std::span<const int> y, std::size_t classes,
                          const Hyperparameters& hyper, TrainingTrace* trace) {
  if (hyper.logreg_learning_rate <= 0 || hyper.logreg_epochs < 1 ||
      hyper.logreg_lambda < 0) {
    throw std::invalid_argument("invalid logistic regression hyperparameters");
  }
  SoftmaxState state{Matrix(classes, x.cols()), std::vector<double>(classes, 0.0)};
  SoftmaxState grad, cand_grad;
  double loss = softmax_objective(state, x, y, hyper.logreg_lambda, grad);
  double lr = hyper.logreg_learning_rate;
  for (int epoch = 0; epoch < hyper.logreg_epochs; ++epoch) {
    // Step with backtracking: a step that raises the objective is retried
    // at half the rate, so the recorded loss never increases.
    SoftmaxState cand = state;
    double cand_loss = loss;
    for (int tries = 0; tries < 40; ++tries) {
      cand = state;
      for (std::size_t k = 0; k < cand.w.data().size(); ++k) {
        cand.w.data()[k] -= lr * grad.w.data()[k];
      }
      for (std::size_t k = 0; k < classes; ++k) cand.b[k] -= lr * grad.b[k];
      cand_loss = softmax_objective(cand, x, y, hyper.logreg_lambda, cand_grad);
      if (cand_loss <= loss) break;
      lr *= 0.5;
    }
    if (cand_loss <= loss) {
      state = std::move(cand);
      grad = cand_grad;
      loss = cand_loss;
    }
    if (trace) trace->epoch_loss.push_back(loss);
  }

  LinearParams out;
  if (classes == 2) {
    out.weights = Matrix(1, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out.weights(0, j) = state.w(1, j) - state.w(0, j);
    }
    out.bias = {state.b[1] - state.b[0]};
  } else {
    out.weights = std::move(state.w);
    out.bias = std::move(state.b);
  }
  return out;
}

LinearParams train_linear_svm(const Matrix& x, std::span<const int> y,
                              std::size_t classes, const Hyperparameters& hyper,
                              std::mt19937_64& rng) {
  if (hyper.svm_lambda <= 0 || hyper.svm_epochs < 1) {
    throw std::invalid_argument("invalid linear SVM hyperparameters");
  }
  const std::size_t n = x.rows(), d = x.cols();
  const double lambda = hyper.svm_lambda;
  const double radius = 1.0 / std::sqrt(lambda);
  const auto targets = one_vs_rest_targets(y, classes);

  LinearParams out;
  out.weights = Matrix(targets.size(), d);
  out.bias.assign(targets.size(), 0.0);

  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < targets.size(); ++m) {
    const auto& t = targets[m];
    // The bias is the weight of a constant feature 1 (index d).
    std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0);
    double step = 0;
    for (int epoch = 0; epoch < hyper.svm_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_in_place(order, rng);
      const bool last = epoch + 1 == hyper.svm_epochs;
      for (std::size_t i : order) {
        step += 1;
        const double eta = 1.0 / (lambda * step);
        const auto row = x.row(i);
        double score = w[d];
        for (std::size_t j = 0; j < d; ++j) score += w[j] * row[j];
        const double shrink = 1.0 - 1.0 / step;
        for (double& v : w) v *= shrink;
        if (t[i] * score < 1.0) {
          const double g = eta * t[i];
          for (std::size_t j = 0; j < d; ++j) w[j] += g * row[j];
          w[d] += g;
        }
        double norm2 = 0;
        for (double v : w) norm2 += v * v;
        if (norm2 > radius * radius) {
          const double s = radius / std::sqrt(norm2);
          for (double& v : w) v *= s;
        }
        if (last) {
          for (std::size_t j = 0; j <= d; ++j) avg[j] += w[j];
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) out.weights(m, j) = avg[j] / static_cast<double>(n);
    out.bias[m] = avg[d] / static_cast<double>(n);
  }
  return out;
}

}  // namespace prodsearch::detail

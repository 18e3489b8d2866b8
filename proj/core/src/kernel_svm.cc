// Gaussian-kernel SVM trained by SMO with maximal-violating-pair working set
// selection; multiclass by one-vs-rest.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "learners_internal.h"

namespace prodsearch::detail {
namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kCacheBudgetDoubles = std::size_t{1} << 24;  // 128 MiB

/// Rows of K(x_i, .) computed on demand. The whole cache is dropped once it
/// outgrows its budget.
class KernelRows {
 public:
  KernelRows(const Matrix& x, double gamma) : x_(x), gamma_(gamma), diag_(x.rows(), 1.0) {}

  const std::vector<double>& row(std::size_t i) {
    auto it = rows_.find(i);
    if (it != rows_.end()) return it->second;
    if ((rows_.size() + 1) * x_.rows() > kCacheBudgetDoubles) rows_.clear();
    std::vector<double> r(x_.rows());
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < x_.rows(); ++j) r[j] = rbf_kernel(xi, x_.row(j), gamma_);
    return rows_.emplace(i, std::move(r)).first->second;
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  const Matrix& x_;
  double gamma_;
  std::vector<double> diag_;
  std::unordered_map<std::size_t, std::vector<double>> rows_;
};

KernelMachine solve_binary(const Matrix& x, std::span<const int> t, KernelRows& kernel,
                           const Hyperparameters& hyper) {
  const std::size_t n = x.rows();
  const double c = hyper.rbf_c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of the dual objective

  auto in_up = [&](std::size_t k) {
    return (t[k] > 0 && alpha[k] < c) || (t[k] < 0 && alpha[k] > 0);
  };
  auto in_low = [&](std::size_t k) {
    return (t[k] > 0 && alpha[k] > 0) || (t[k] < 0 && alpha[k] < c);
  };

  for (long iter = 0; iter < hyper.rbf_max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = -t[k] * grad[k];
      if (in_up(k) && v > gmax) {
        gmax = v;
        i = k;
      }
      if (in_low(k) && v < gmin) {
        gmin = v;
        j = k;
      }
    }
    if (i == n || j == n || gmax - gmin < hyper.rbf_tolerance) break;

    const auto& qi = kernel.row(i);
    const auto& qj = kernel.row(j);
    const double kij = qi[j];
    const double old_i = alpha[i], old_j = alpha[j];
    if (t[i] != t[j]) {
      double quad = kernel.diag(i) + kernel.diag(j) + 2 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = kernel.diag(i) + kernel.diag(j) - 2 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    if (di == 0 && dj == 0) break;
    for (std::size_t k = 0; k < n; ++k) {
      grad[k] += t[k] * (t[i] * qi[k] * di + t[j] * qj[k] * dj);
    }
  }

  // rho from free support vectors, else the midpoint of the feasible range.
  double sum_free = 0;
  std::size_t n_free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double yg = t[k] * grad[k];
    if (alpha[k] > 0 && alpha[k] < c) {
      sum_free += yg;
      ++n_free;
    } else if ((alpha[k] >= c && t[k] < 0) || (alpha[k] <= 0 && t[k] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  double rho;
  if (n_free > 0) {
    rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = (ub + lb) / 2;
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }

  KernelMachine m;
  m.support = Matrix(0, x.cols());
  for (std::size_t k = 0; k < n; ++k) {
    if (alpha[k] > 0) {
      m.support.append_row(x.row(k));
      m.coef.push_back(alpha[k] * t[k]);
    }
  }
  m.bias = -rho;
  return m;
}

}  // namespace

RbfParams train_rbf_svm(const Matrix& x, std::span<const int> y, std::size_t classes,
                        const Hyperparameters& hyper) {
  if (hyper.rbf_c <= 0 || hyper.rbf_tolerance <= 0) {
    throw std::invalid_argument("invalid RBF SVM hyperparameters");
  }
  RbfParams out;
  out.gamma = hyper.rbf_gamma > 0 ? hyper.rbf_gamma
                                  : 1.0 / static_cast<double>(std::max<std::size_t>(1, x.cols()));
  KernelRows kernel(x, out.gamma);
  for (const auto& t : one_vs_rest_targets(y, classes)) {
    out.machines.push_back(solve_binary(x, t, kernel, hyper));
  }
  return out;
}

}  // namespace prodsearch::detail

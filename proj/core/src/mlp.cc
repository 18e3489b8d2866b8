// One-hidden-layer ReLU perceptron with softmax output, trained by
// mini-batch SGD on mean cross-entropy.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "learners_internal.h"
#include "sampling.h"

namespace prodsearch {
namespace {

MlpParams zeros_like(const MlpParams& p) {
  return MlpParams{Matrix(p.w1.rows(), p.w1.cols()), std::vector<double>(p.b1.size(), 0.0),
                   Matrix(p.w2.rows(), p.w2.cols()), std::vector<double>(p.b2.size(), 0.0)};
}

/// Adds the summed gradient over `rows` to grad (if non-null); returns the
/// summed loss.
double accumulate(const MlpParams& p, const Matrix& x, std::span<const int> labels,
                  std::span<const std::size_t> rows, MlpParams* grad) {
  const std::size_t d = p.w1.rows(), hidden = p.w1.cols(), classes = p.w2.rows();
  std::vector<double> h(hidden), out(classes), dh(hidden);
  double loss = 0;
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    std::copy(p.b1.begin(), p.b1.end(), h.begin());
    for (std::size_t k = 0; k < d; ++k) {
      const double v = xr[k];
      if (v == 0) continue;
      const auto w = p.w1.row(k);
      for (std::size_t j = 0; j < hidden; ++j) h[j] += v * w[j];
    }
    for (double& v : h) v = v > 0 ? v : 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const auto w = p.w2.row(c);
      double a = p.b2[c];
      for (std::size_t j = 0; j < hidden; ++j) a += w[j] * h[j];
      out[c] = a;
    }
    const double zmax = *std::max_element(out.begin(), out.end());
    double denom = 0;
    for (double& v : out) {
      v = std::exp(v - zmax);
      denom += v;
    }
    for (double& v : out) v /= denom;
    const int y = labels[r];
    loss += -std::log(std::max(out[y], 1e-300));
    if (!grad) continue;

    // out now holds dL/dlogits after subtracting the one-hot target.
    out[y] -= 1.0;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      const double g = out[c];
      grad->b2[c] += g;
      auto gw = grad->w2.row(c);
      const auto w = p.w2.row(c);
      for (std::size_t j = 0; j < hidden; ++j) {
        gw[j] += g * h[j];
        dh[j] += g * w[j];
      }
    }
    for (std::size_t j = 0; j < hidden; ++j) {
      if (h[j] <= 0) dh[j] = 0;
      grad->b1[j] += dh[j];
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double v = xr[k];
      if (v == 0) continue;
      auto gw = grad->w1.row(k);
      for (std::size_t j = 0; j < hidden; ++j) gw[j] += v * dh[j];
    }
  }
  return loss;
}

void scale(MlpParams& p, double s) {
  for (double& v : p.w1.data()) v *= s;
  for (double& v : p.b1) v *= s;
  for (double& v : p.w2.data()) v *= s;
  for (double& v : p.b2) v *= s;
}

}  // namespace

namespace mlp {

MlpParams init(std::size_t input_dim, std::size_t hidden, std::size_t classes,
               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(input_dim)));
  std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(hidden)));
  MlpParams p{Matrix(input_dim, hidden), std::vector<double>(hidden, 0.0),
              Matrix(classes, hidden), std::vector<double>(classes, 0.0)};
  for (double& v : p.w1.data()) v = n1(rng);
  for (double& v : p.w2.data()) v = n2(rng);
  return p;
}

double loss_and_gradient(const MlpParams& params, const Matrix& x,
                         std::span<const int> labels, MlpParams* grad) {
  if (x.rows() == 0) throw std::invalid_argument("empty batch");
  if (x.cols() != params.w1.rows()) throw std::invalid_argument("input width mismatch");
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (grad) *grad = zeros_like(params);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const double loss = accumulate(params, x, labels, rows, grad) * inv_n;
  if (grad) scale(*grad, inv_n);
  return loss;
}

}  // namespace mlp

namespace detail {

MlpParams train_mlp(const Matrix& x, std::span<const int> y, std::size_t classes,
                    const Hyperparameters& hyper, std::mt19937_64& rng,
                    TrainingTrace* trace) {
  if (hyper.mlp_hidden < 1 || hyper.mlp_epochs < 1 || hyper.mlp_batch < 1 ||
      hyper.mlp_learning_rate <= 0) {
    throw std::invalid_argument("invalid MLP hyperparameters");
  }
  MlpParams p = mlp::init(x.cols(), static_cast<std::size_t>(hyper.mlp_hidden), classes, rng());
  MlpParams grad = zeros_like(p);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(hyper.mlp_batch);

  for (int epoch = 0; epoch < hyper.mlp_epochs; ++epoch) {
    shuffle_in_place(order, rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      scale(grad, 0.0);
      epoch_loss += accumulate(p, x, y, rows, &grad);
      const double step = hyper.mlp_learning_rate / static_cast<double>(rows.size());
      for (std::size_t k = 0; k < p.w1.data().size(); ++k) p.w1.data()[k] -= step * grad.w1.data()[k];
      for (std::size_t k = 0; k < p.b1.size(); ++k) p.b1[k] -= step * grad.b1[k];
      for (std::size_t k = 0; k < p.w2.data().size(); ++k) p.w2.data()[k] -= step * grad.w2.data()[k];
      for (std::size_t k = 0; k < p.b2.size(); ++k) p.b2[k] -= step * grad.b2[k];
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(x.rows()));
  }
  return p;
}

}  // namespace detail
}  // namespace prodsearch

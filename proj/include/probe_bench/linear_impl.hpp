#pragma once

// Template definitions for linear.hpp.

#include <algorithm>
#include <array>
#include <cmath>

namespace probe_bench {

template <Objective F>
SolverResult minimize_gd(const F& objective, Eigen::VectorXd theta, const SolverConfig& cfg) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;

  SolverResult out;
  Eigen::VectorXd grad(theta.size());
  double value = objective(theta, &grad);
  double step = 1.0;
  // Nonmonotone Armijo reference: max of the last kWindow accepted values,
  // so that Barzilai-Borwein steps are rarely cut back.
  constexpr std::size_t kWindow = 10;
  std::array<double, kWindow> history;
  history.fill(value);
  Eigen::VectorXd trial(theta.size());
  Eigen::VectorXd trial_grad(theta.size());

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= cfg.tolerance) {
      out.converged = true;
      break;
    }
    double alpha = step;
    double trial_value = 0.0;
    const double reference = *std::max_element(history.begin(), history.end());
    while (true) {
      trial = theta - alpha * grad;
      trial_value = objective(trial, &trial_grad);
      if (std::isfinite(trial_value) && trial_value <= reference - kArmijo * alpha * gnorm2) break;
      alpha *= 0.5;
      if (alpha < kMinStep) break;
    }
    if (alpha < kMinStep) break;  // no descent possible at working precision

    const double sy = (trial - theta).dot(trial_grad - grad);
    const double ss = alpha * alpha * gnorm2;
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : 2.0 * alpha;

    theta.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    history[static_cast<std::size_t>(it) % kWindow] = value;
  }
  if (!out.converged && std::sqrt(grad.squaredNorm()) <= cfg.tolerance) out.converged = true;
  out.theta = std::move(theta);
  out.value = value;
  out.gradient_norm = grad.norm();
  out.iterations = it;
  return out;
}

template <typename Scalar>
SoftmaxObjective<Scalar>::SoftmaxObjective(Matrix features, Labels labels, int num_classes, Scalar lambda)
    : z_(std::move(features)), k_(num_classes), lambda_(lambda) {
  onehot_ = Matrix::Zero(z_.rows(), k_);
  for (Index i = 0; i < z_.rows(); ++i) onehot_(i, labels[static_cast<std::size_t>(i)]) = Scalar(1);
  labels_ = std::move(labels);
}

template <typename Scalar>
Scalar SoftmaxObjective<Scalar>::operator()(const Vector& theta, Vector* grad) const {
  using std::exp;
  using std::log;
  const Index n = z_.rows();
  const Index d = z_.cols();
  const Eigen::Map<const Matrix> W(theta.data(), k_, d);
  const auto b = theta.tail(k_);

  // Column-wise products on contiguous columns of z_; at probe sizes GEMM
  // packing costs more than the arithmetic.
  Matrix& logits = scratch_logits_;
  logits.resize(n, k_);
  for (Index c = 0; c < k_; ++c) logits.col(c).setConstant(b(c));
  for (Index j = 0; j < d; ++j) {
    for (Index c = 0; c < k_; ++c) logits.col(c) += W(c, j) * z_.col(j);
  }

  Scalar data_loss(0);
  for (Index i = 0; i < n; ++i) {
    const Scalar row_max = logits.row(i).maxCoeff();
    const int label = labels_[static_cast<std::size_t>(i)];
    const Scalar own = logits(i, label) - row_max;
    Scalar row_sum(0);
    for (Index c = 0; c < k_; ++c) {
      logits(i, c) = exp(logits(i, c) - row_max);
      row_sum += logits(i, c);
    }
    logits.row(i) /= row_sum;  // now the softmax probabilities
    data_loss += log(row_sum) - own;
  }
  const Scalar loss = data_loss / Scalar(n) + lambda_ / Scalar(2) * W.squaredNorm();

  if (grad != nullptr) {
    grad->resize(theta.size());
    Matrix& residual = logits;
    residual -= onehot_;
    residual /= Scalar(n);
    Eigen::Map<Matrix> gW(grad->data(), k_, d);
    for (Index j = 0; j < d; ++j) {
      for (Index c = 0; c < k_; ++c) gW(c, j) = residual.col(c).dot(z_.col(j)) + lambda_ * W(c, j);
    }
    grad->tail(k_) = residual.colwise().sum().transpose();
  }
  return loss;
}

template <typename Scalar>
SquaredHingeObjective<Scalar>::SquaredHingeObjective(Matrix features, const Labels& labels, int positive_class,
                                                     Scalar c)
    : z_(std::move(features)), target_(z_.rows()), c_(c) {
  for (Index i = 0; i < z_.rows(); ++i) {
    target_(i) = labels[static_cast<std::size_t>(i)] == positive_class ? Scalar(1) : Scalar(-1);
  }
}

template <typename Scalar>
Scalar SquaredHingeObjective<Scalar>::operator()(const Vector& theta, Vector* grad) const {
  const Index n = z_.rows();
  const Index d = z_.cols();
  const auto w = theta.head(d);
  const Scalar b = theta(d);

  Vector slack = Vector::Ones(n) - target_.cwiseProduct((z_ * w).array().matrix() + Vector::Constant(n, b));
  slack = slack.cwiseMax(Scalar(0));
  const Scalar loss = w.squaredNorm() / Scalar(2) + c_ * slack.squaredNorm() / Scalar(n);

  if (grad != nullptr) {
    grad->resize(theta.size());
    const Vector coef = (Scalar(-2) * c_ / Scalar(n)) * target_.cwiseProduct(slack);
    grad->head(d).noalias() = z_.transpose() * coef;
    grad->head(d) += w;
    (*grad)(d) = coef.sum();
  }
  return loss;
}

}  // namespace probe_bench

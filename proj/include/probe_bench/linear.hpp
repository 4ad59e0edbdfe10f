#pragma once

#include <cstdint>
#include <optional>

#include "json.hpp"
#include "probe_bench/types.hpp"

namespace probe_bench {

/// Per-feature z-scoring fitted on training rows. Scales below 1e-8 are
/// floored so constant columns map to zero instead of dividing by zero.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static constexpr double kScaleFloor = 1e-8;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

/// Full-batch gradient descent settings shared by both linear probes.
struct SolverConfig {
  int max_iterations = 2000;
  double tolerance = 1e-6;  // on the Euclidean norm of the full gradient
};

struct SolverResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Differentiable objective over a flat parameter vector. Returns the value
/// and, when `grad` is non-null, writes the gradient.
template <typename F>
concept Objective = requires(const F& f, const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  { f(theta, grad) } -> std::convertible_to<double>;
};

/// Gradient descent with backtracking. Each trial step starts from the
/// Barzilai-Borwein step of the previous iteration and halves until it meets
/// an Armijo condition against the largest of the last 10 accepted losses.
template <Objective F>
SolverResult minimize_gd(const F& objective, Eigen::VectorXd theta, const SolverConfig& cfg);

/// Mean softmax cross-entropy plus (lambda/2)||W||_F^2 (bias unpenalized).
/// Parameters pack W (K x d, column-major) followed by b (K).
template <typename Scalar>
class SoftmaxObjective {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SoftmaxObjective(Matrix features, Labels labels, int num_classes, Scalar lambda);

  Scalar operator()(const Vector& theta, Vector* grad) const;

  Index num_params() const { return k_ * (z_.cols() + 1); }
  int num_classes() const { return static_cast<int>(k_); }

 private:
  Matrix z_;
  Matrix onehot_;
  Labels labels_;
  Index k_;
  Scalar lambda_;
  mutable Matrix scratch_logits_;  // one objective per solver call; not shared
};

/// One-vs-rest squared hinge for one class:
/// (1/2)||w||^2 + C * mean_i max(0, 1 - t_i (w.z_i + b))^2, t_i = +1 for the
/// positive class. Parameters pack w (d) followed by b.
template <typename Scalar>
class SquaredHingeObjective {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SquaredHingeObjective(Matrix features, const Labels& labels, int positive_class, Scalar c);

  Scalar operator()(const Vector& theta, Vector* grad) const;

  Index num_params() const { return z_.cols() + 1; }

 private:
  Matrix z_;
  Vector target_;
  Scalar c_;
};

/// Training rows after z-scoring, re-expressed in an orthonormal basis of
/// their own row span when d exceeds the row count. An L2-penalized linear
/// model trained by gradient descent from zero keeps its weights inside that
/// span, so fitting on the r <= N span coordinates follows the same iterates
/// as fitting in d dimensions.
class LinearDesign {
 public:
  explicit LinearDesign(const Eigen::MatrixXd& X);

  const Standardizer& scaler() const { return scaler_; }
  const Eigen::MatrixXd& train() const { return coords_; }
  bool reduced() const { return projector_.has_value(); }

  /// Coordinates of a raw sample in the training basis.
  Eigen::VectorXd map(const Eigen::VectorXd& x) const;

  /// Lifts span-coordinate weights (K x r) to standardized features (K x d).
  Eigen::MatrixXd lift(const Eigen::MatrixXd& weights) const;

 private:
  Standardizer scaler_;
  Eigen::MatrixXd coords_;
  std::optional<Eigen::MatrixXd> projector_;  // r x d
};

struct LogisticConfig {
  std::optional<double> lambda;  // default 1/N
  SolverConfig solver;
  std::uint64_t seed = 0;  // reserved; the solver is deterministic
};

struct LinearSvmConfig {
  double c = 1.0;
  SolverConfig solver;
  std::uint64_t seed = 0;
};

/// Weights act on standardized features: z(x) = W * scale(x) + b.
struct LogisticModel {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  double lambda = 0.0;
  Standardizer scaler;
  LogisticConfig config;
  int iterations = 0;
  bool converged = false;
};

struct LinearSvmModel {
  Eigen::MatrixXd W;  // row k is the class-k one-vs-rest hyperplane
  Eigen::VectorXd b;
  double c = 1.0;
  Standardizer scaler;
  LinearSvmConfig config;
};

/// Number of classes implied by labels; throws unless every class in [0, K)
/// appears and K >= 2.
int checked_num_classes(const Labels& y);

/// Weights and biases of a fit in (possibly reduced) design coordinates.
struct LinearFit {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  int iterations = 0;
  bool converged = false;
};

LinearFit fit_softmax(const Eigen::MatrixXd& features, const Labels& y, int num_classes, double lambda,
                      const SolverConfig& solver);
LinearFit fit_ovr_squared_hinge(const Eigen::MatrixXd& features, const Labels& y, int num_classes, double c,
                                const SolverConfig& solver);

LogisticModel train_logistic(const Eigen::MatrixXd& X, const Labels& y, const LogisticConfig& cfg = {});
LinearSvmModel train_linear_svm(const Eigen::MatrixXd& X, const Labels& y, const LinearSvmConfig& cfg = {});

/// Pre-softmax logits.
Eigen::VectorXd logistic_scores(const LogisticModel& model, const Eigen::VectorXd& x);
/// Raw one-vs-rest decision values.
Eigen::VectorXd svm_scores(const LinearSvmModel& model, const Eigen::VectorXd& x);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Argmax with ties resolved to the lowest class index.
int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores);

nlohmann::json to_json(const LogisticModel& model);
nlohmann::json to_json(const LinearSvmModel& model);

}  // namespace probe_bench

#include "probe_bench/linear_impl.hpp"

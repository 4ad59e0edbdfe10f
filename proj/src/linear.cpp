#include "probe_bench/linear.hpp"

#include <Eigen/Eigenvalues>

#include "probe_bench/errors.hpp"

namespace probe_bench {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const auto n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.scale = ((X.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
  s.scale = s.scale.cwiseMax(kScaleFloor);
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return ((x.transpose() - mean).array() / scale.array()).matrix().transpose();
}

LinearDesign::LinearDesign(const Eigen::MatrixXd& X) : scaler_(Standardizer::fit(X)) {
  Eigen::MatrixXd standardized = scaler_.apply(X);
  if (standardized.cols() <= standardized.rows()) {
    coords_ = std::move(standardized);
    return;
  }
  // Gram eigendecomposition: X_s = U S V^T restricted to nonzero spectrum.
  const Eigen::MatrixXd gram = standardized * standardized.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.size() > 0 ? values.maxCoeff() : 0.0;
  std::vector<Index> keep;
  for (Index j = values.size() - 1; j >= 0; --j) {
    if (top > 0.0 && values(j) > 1e-10 * top) keep.push_back(j);
  }
  const auto r = static_cast<Index>(keep.size());
  Eigen::MatrixXd u(gram.rows(), r);
  Eigen::VectorXd sigma(r);
  for (Index c = 0; c < r; ++c) {
    u.col(c) = eig.eigenvectors().col(keep[static_cast<std::size_t>(c)]);
    sigma(c) = std::sqrt(values(keep[static_cast<std::size_t>(c)]));
  }
  coords_ = u * sigma.asDiagonal();
  projector_ = sigma.cwiseInverse().asDiagonal() * (u.transpose() * standardized);
}

Eigen::VectorXd LinearDesign::map(const Eigen::VectorXd& x) const {
  if (x.size() != scaler_.mean.size()) {
    throw ProbeError("dimension mismatch: expected " + std::to_string(scaler_.mean.size()) + ", got " +
                     std::to_string(x.size()));
  }
  Eigen::VectorXd s = scaler_.apply(x);
  if (!projector_) return s;
  return *projector_ * s;
}

Eigen::MatrixXd LinearDesign::lift(const Eigen::MatrixXd& weights) const {
  if (!projector_) return weights;
  return weights * *projector_;
}

int checked_num_classes(const Labels& y) {
  if (y.empty()) throw ProbeError("no training rows");
  const int k = *std::max_element(y.begin(), y.end()) + 1;
  if (k < 2) throw ProbeError("training labels contain a single class");
  const auto counts = class_counts(y, k);
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ProbeError("class " + std::to_string(c) + " missing from training labels");
    }
  }
  return k;
}

namespace {

void check_inputs(const Eigen::MatrixXd& X, const Labels& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ProbeError("row count differs from label count");
  if (!X.allFinite()) throw ProbeError("non-finite feature value");
}

}  // namespace

LinearFit fit_softmax(const Eigen::MatrixXd& features, const Labels& y, int num_classes, double lambda,
                      const SolverConfig& solver) {
  const SoftmaxObjective<double> objective(features, y, num_classes, lambda);
  const auto result = minimize_gd(objective, Eigen::VectorXd::Zero(objective.num_params()), solver);
  if (!result.theta.allFinite()) throw ProbeError("logistic solver diverged");
  const Index d = features.cols();
  LinearFit fit;
  fit.W = Eigen::Map<const Eigen::MatrixXd>(result.theta.data(), num_classes, d);
  fit.b = result.theta.tail(num_classes);
  fit.iterations = result.iterations;
  fit.converged = result.converged;
  return fit;
}

LinearFit fit_ovr_squared_hinge(const Eigen::MatrixXd& features, const Labels& y, int num_classes, double c,
                                const SolverConfig& solver) {
  const Index d = features.cols();
  LinearFit fit;
  fit.W.resize(num_classes, d);
  fit.b.resize(num_classes);
  fit.converged = true;
  for (int k = 0; k < num_classes; ++k) {
    const SquaredHingeObjective<double> objective(features, y, k, c);
    const auto result = minimize_gd(objective, Eigen::VectorXd::Zero(objective.num_params()), solver);
    if (!result.theta.allFinite()) throw ProbeError("SVM solver diverged");
    fit.W.row(k) = result.theta.head(d).transpose();
    fit.b(k) = result.theta(d);
    fit.iterations += result.iterations;
    fit.converged = fit.converged && result.converged;
  }
  return fit;
}

LogisticModel train_logistic(const Eigen::MatrixXd& X, const Labels& y, const LogisticConfig& cfg) {
  check_inputs(X, y);
  const int k = checked_num_classes(y);
  const double lambda = cfg.lambda.value_or(1.0 / static_cast<double>(X.rows()));
  if (lambda < 0.0) throw ProbeError("lambda must be >= 0");
  const LinearDesign design(X);
  const LinearFit fit = fit_softmax(design.train(), y, k, lambda, cfg.solver);
  LogisticModel model;
  model.W = design.lift(fit.W);
  model.b = fit.b;
  model.lambda = lambda;
  model.scaler = design.scaler();
  model.config = cfg;
  model.iterations = fit.iterations;
  model.converged = fit.converged;
  return model;
}

LinearSvmModel train_linear_svm(const Eigen::MatrixXd& X, const Labels& y, const LinearSvmConfig& cfg) {
  check_inputs(X, y);
  const int k = checked_num_classes(y);
  if (!(cfg.c > 0.0)) throw ProbeError("SVM C must be > 0");
  const LinearDesign design(X);
  const LinearFit fit = fit_ovr_squared_hinge(design.train(), y, k, cfg.c, cfg.solver);
  LinearSvmModel model;
  model.W = design.lift(fit.W);
  model.b = fit.b;
  model.c = cfg.c;
  model.scaler = design.scaler();
  model.config = cfg;
  return model;
}

namespace {

Eigen::VectorXd linear_scores(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Standardizer& scaler,
                              const Eigen::VectorXd& x) {
  if (x.size() != W.cols()) {
    throw ProbeError("dimension mismatch: model expects " + std::to_string(W.cols()) + " features, got " +
                     std::to_string(x.size()));
  }
  return W * scaler.apply(x) + b;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

nlohmann::json scaler_json(const Standardizer& s) {
  return {{"mean", vector_json(s.mean.transpose())}, {"scale", vector_json(s.scale.transpose())}};
}

nlohmann::json solver_json(const SolverConfig& s) {
  return {{"max_iterations", s.max_iterations}, {"tolerance", s.tolerance}};
}

}  // namespace

Eigen::VectorXd logistic_scores(const LogisticModel& model, const Eigen::VectorXd& x) {
  return linear_scores(model.W, model.b, model.scaler, x);
}

Eigen::VectorXd svm_scores(const LinearSvmModel& model, const Eigen::VectorXd& x) {
  return linear_scores(model.W, model.b, model.scaler, x);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  int best = 0;
  for (Index k = 1; k < scores.size(); ++k) {
    if (scores(k) > scores(best)) best = static_cast<int>(k);
  }
  return best;
}

nlohmann::json to_json(const LogisticModel& model) {
  return {{"family", "logistic"},
          {"W", matrix_json(model.W)},
          {"b", vector_json(model.b)},
          {"scaler", scaler_json(model.scaler)},
          {"config", {{"lambda", model.lambda}, {"solver", solver_json(model.config.solver)}}},
          {"iterations", model.iterations},
          {"converged", model.converged}};
}

nlohmann::json to_json(const LinearSvmModel& model) {
  return {{"family", "linear_svm"},
          {"W", matrix_json(model.W)},
          {"b", vector_json(model.b)},
          {"scaler", scaler_json(model.scaler)},
          {"config", {{"C", model.c}, {"solver", solver_json(model.config.solver)}}}};
}

}  // namespace probe_bench

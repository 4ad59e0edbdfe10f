#pragma once

#include <string>
#include <vector>

#include "probe_bench/types.hpp"

namespace probe_bench {

/// Held-out scores pooled over all folds, one row per specimen.
struct PooledPredictions {
  std::vector<std::string> ids;
  Labels labels;
  Eigen::MatrixXd scores;  // N x K
  Labels predicted;        // argmax of scores, lowest index on ties

  /// Fills `predicted` from `scores`.
  static PooledPredictions from_scores(std::vector<std::string> ids, Labels labels, Eigen::MatrixXd scores);
  Index size() const { return scores.rows(); }
  int num_classes() const { return static_cast<int>(scores.cols()); }
};

struct MetricBundle {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_auc = 0.0;
};

double accuracy(const Labels& labels, const Labels& predicted);

/// Mean per-class recall.
double balanced_accuracy(const Labels& labels, const Labels& predicted, int num_classes);

/// Unweighted mean of per-class F1; zero denominators count as 0.
double macro_f1(const Labels& labels, const Labels& predicted, int num_classes);

/// Mann-Whitney AUC of `scores` ranking `positive` rows above the rest, with
/// midranks for ties.
double binary_auc(const Eigen::Ref<const Eigen::VectorXd>& scores, const std::vector<bool>& positive);

/// Mean over classes of the one-vs-rest AUC of score column k.
double macro_ovr_auc(const Labels& labels, const Eigen::MatrixXd& scores);

double accuracy(const PooledPredictions& p);
double macro_f1(const PooledPredictions& p);
double macro_ovr_auc(const PooledPredictions& p);
MetricBundle compute_metrics(const PooledPredictions& p);

}  // namespace probe_bench

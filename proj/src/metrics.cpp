#include "probe_bench/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "probe_bench/errors.hpp"
#include "probe_bench/linear.hpp"

namespace probe_bench {

PooledPredictions PooledPredictions::from_scores(std::vector<std::string> ids, Labels labels,
                                                 Eigen::MatrixXd scores) {
  PooledPredictions p{std::move(ids), std::move(labels), std::move(scores), {}};
  p.predicted.reserve(static_cast<std::size_t>(p.scores.rows()));
  for (Index i = 0; i < p.scores.rows(); ++i) p.predicted.push_back(argmax_lowest(p.scores.row(i).transpose()));
  return p;
}

namespace {

void check_pair(const Labels& labels, const Labels& predicted) {
  if (labels.empty()) throw DataError("metric of an empty prediction set");
  if (labels.size() != predicted.size()) throw DataError("label and prediction counts differ");
}

}  // namespace

double accuracy(const Labels& labels, const Labels& predicted) {
  check_pair(labels, predicted);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double balanced_accuracy(const Labels& labels, const Labels& predicted, int num_classes) {
  check_pair(labels, predicted);
  double sum = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    std::size_t pos = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != k) continue;
      ++pos;
      hit += predicted[i] == k ? 1 : 0;
    }
    sum += pos > 0 ? static_cast<double>(hit) / static_cast<double>(pos) : 0.0;
  }
  return sum / num_classes;
}

double macro_f1(const Labels& labels, const Labels& predicted, int num_classes) {
  check_pair(labels, predicted);
  double sum = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    double tp = 0;
    double fp = 0;
    double fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool actual = labels[i] == k;
      const bool guess = predicted[i] == k;
      tp += actual && guess ? 1 : 0;
      fp += !actual && guess ? 1 : 0;
      fn += actual && !guess ? 1 : 0;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / num_classes;
}

double binary_auc(const Eigen::Ref<const Eigen::VectorXd>& scores, const std::vector<bool>& positive) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (positive.size() != n) throw DataError("AUC: score and label counts differ");
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs at least one positive and one negative");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Index>(a)) < scores(static_cast<Index>(b));
  });
  // Sum of midranks (1-based) over positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores(static_cast<Index>(order[j])) == scores(static_cast<Index>(order[i]))) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) rank_sum += positive[order[t]] ? midrank : 0.0;
    i = j;
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double macro_ovr_auc(const Labels& labels, const Eigen::MatrixXd& scores) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) throw DataError("AUC: row counts differ");
  const auto k = static_cast<int>(scores.cols());
  double sum = 0.0;
  std::vector<bool> positive(labels.size());
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) positive[i] = labels[i] == c;
    if (std::find(positive.begin(), positive.end(), true) == positive.end() ||
        std::find(positive.begin(), positive.end(), false) == positive.end()) {
      throw DataError("macro AUC: class " + std::to_string(c) + " has no positives or no negatives");
    }
    sum += binary_auc(scores.col(c), positive);
  }
  return sum / k;
}

double accuracy(const PooledPredictions& p) { return accuracy(p.labels, p.predicted); }
double macro_f1(const PooledPredictions& p) { return macro_f1(p.labels, p.predicted, p.num_classes()); }
double macro_ovr_auc(const PooledPredictions& p) { return macro_ovr_auc(p.labels, p.scores); }

MetricBundle compute_metrics(const PooledPredictions& p) {
  return {accuracy(p), balanced_accuracy(p.labels, p.predicted, p.num_classes()), macro_f1(p), macro_ovr_auc(p)};
}

}  // namespace probe_bench

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "probe_bench/rng.hpp"
#include "probe_bench/types.hpp"

namespace probe_bench {

/// Internal nodes route x[feature] < threshold to the left child.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXd value;  // leaves only

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int max_depth = 0;

  int leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  const Eigen::VectorXd& predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].value;
  }
};

/// Row orders per feature, ascending by value then row index.
class SortedColumns {
 public:
  explicit SortedColumns(const Eigen::MatrixXd& X);
  std::span<const Index> order(Index feature) const { return orders_[static_cast<std::size_t>(feature)]; }

 private:
  std::vector<std::vector<Index>> orders_;
};

/// CART tree on weighted rows (weight = bootstrap multiplicity; zero excludes
/// a row). Each node scores `features_per_split` features drawn from `stream`
/// (all features when it equals d) by Gini decrease; thresholds sit at
/// midpoints between consecutive distinct values, and gain ties go to the
/// lower feature index, then the lower threshold. Leaves hold weighted class
/// frequencies.
DecisionTree grow_gini_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y,
                            std::span<const double> weights, int num_classes, int max_depth,
                            int features_per_split, CounterStream& stream);

/// Second-order regression tree: split gain G_L^2/(H_L+l) + G_R^2/(H_R+l) -
/// G^2/(H+l), leaf value -G/(H+l), with l = lambda_leaf.
DecisionTree grow_gradient_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted,
                                std::span<const double> grad, std::span<const double> hess, int max_depth,
                                double lambda_leaf);

struct ForestConfig {
  int n_trees = 200;
  int max_depth = 4;
  std::optional<int> features_per_split;  // default floor(sqrt(d))
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;  // leaf values are class-probability vectors
  ForestConfig config;
  int features_per_split = 1;
  int num_classes = 0;
  Index dim = 0;
};

/// Tree t bootstraps and samples features from the stream keyed by
/// derive_seed(seed, t), so the model does not depend on `workers`.
ForestModel train_random_forest(const Eigen::MatrixXd& X, const Labels& y, const ForestConfig& cfg = {},
                                int workers = 1);
/// Same, reusing column orders of X.
ForestModel train_random_forest(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y,
                                const ForestConfig& cfg, int workers = 1);

/// Mean leaf probability vector across trees.
Eigen::VectorXd forest_scores(const ForestModel& model, const Eigen::VectorXd& x);

struct GbtConfig {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  double lambda_leaf = 1.0;
  std::uint64_t seed = 0;  // reserved: no subsampling
};

struct GbtModel {
  std::vector<std::vector<DecisionTree>> stage_trees;  // [round][class]
  Eigen::VectorXd base_score;                          // log class priors
  GbtConfig config;
  Index dim = 0;
  std::vector<double> train_loss;  // mean cross-entropy before round 1 and after each round
};

GbtModel train_gbt(const Eigen::MatrixXd& X, const Labels& y, const GbtConfig& cfg = {});
GbtModel train_gbt(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y, const GbtConfig& cfg);

/// base_score + learning_rate * sum of stage contributions (logits).
Eigen::VectorXd gbt_scores(const GbtModel& model, const Eigen::VectorXd& x);

nlohmann::json to_json(const DecisionTree& tree);
nlohmann::json to_json(const ForestModel& model);
nlohmann::json to_json(const GbtModel& model);

}  // namespace probe_bench

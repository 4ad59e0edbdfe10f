#include "probe_bench/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "probe_bench/errors.hpp"
#include "probe_bench/linear.hpp"
#include "probe_bench/parallel.hpp"

namespace probe_bench {

int DecisionTree::leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int at = 0;
  while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    at = x(node.feature) < node.threshold ? node.left : node.right;
  }
  return at;
}

SortedColumns::SortedColumns(const Eigen::MatrixXd& X) : orders_(static_cast<std::size_t>(X.cols())) {
  for (Index f = 0; f < X.cols(); ++f) {
    auto& order = orders_[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return X(a, f) < X(b, f); });
  }
}

namespace {

constexpr double kMinGain = 1e-12;

/// Weighted class counts; score is sum(count^2) / total.
struct GiniPolicy {
  struct Stats {
    std::vector<double> counts;
    double total = 0.0;
  };
  const Labels& y;
  std::span<const double> w;
  int k;

  Stats empty() const { return {std::vector<double>(static_cast<std::size_t>(k), 0.0), 0.0}; }
  void add(Stats& s, Index row) const {
    const double wr = w[static_cast<std::size_t>(row)];
    s.counts[static_cast<std::size_t>(y[static_cast<std::size_t>(row)])] += wr;
    s.total += wr;
  }
  void subtract(Stats& out, const Stats& a, const Stats& b) const {
    for (std::size_t c = 0; c < out.counts.size(); ++c) out.counts[c] = a.counts[c] - b.counts[c];
    out.total = a.total - b.total;
  }
  double score(const Stats& s) const {
    if (s.total <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : s.counts) sq += c * c;
    return sq / s.total;
  }
  bool pure(const Stats& s) const {
    return std::count_if(s.counts.begin(), s.counts.end(), [](double c) { return c > 0.0; }) <= 1;
  }
  Eigen::VectorXd leaf(const Stats& s) const {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(s.counts.data(), k);
    return v / s.total;
  }
};

/// Gradient/hessian sums; score is G^2 / (H + lambda).
struct GradientPolicy {
  struct Stats {
    double g = 0.0;
    double h = 0.0;
  };
  std::span<const double> grad;
  std::span<const double> hess;
  double lambda;

  Stats empty() const { return {}; }
  void add(Stats& s, Index row) const {
    s.g += grad[static_cast<std::size_t>(row)];
    s.h += hess[static_cast<std::size_t>(row)];
  }
  void subtract(Stats& out, const Stats& a, const Stats& b) const {
    out.g = a.g - b.g;
    out.h = a.h - b.h;
  }
  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda); }
  bool pure(const Stats&) const { return false; }
  Eigen::VectorXd leaf(const Stats& s) const { return Eigen::VectorXd::Constant(1, -s.g / (s.h + lambda)); }
};

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m > a ? m : b;
}

/// Grows level by level: one pass over each feature's sorted order serves
/// every open node of the level. Nodes call `choose()` in breadth-first order
/// for their ascending candidate features. Rows with where[row] < 0 are
/// excluded.
template <typename Policy, typename Chooser>
DecisionTree grow(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Policy& policy,
                  std::vector<int> where, int max_depth, Chooser&& choose) {
  using Stats = decltype(policy.empty());
  struct Open {
    int node;
    Stats parent;
    double parent_score = 0.0;
    std::vector<char> candidate;
    Stats left;
    Index prev = -1;
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;
  };

  DecisionTree tree;
  tree.max_depth = max_depth;
  tree.nodes.emplace_back();
  const Index n = X.rows();
  const Index d = X.cols();
  std::vector<int> level{0};
  std::vector<int> slot;

  for (int depth = 0; !level.empty(); ++depth) {
    std::vector<Stats> stats(level.size(), policy.empty());
    std::vector<Index> members(level.size(), 0);
    slot.assign(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < level.size(); ++i) slot[static_cast<std::size_t>(level[i])] = static_cast<int>(i);
    for (Index r = 0; r < n; ++r) {
      const int w = where[static_cast<std::size_t>(r)];
      if (w < 0 || slot[static_cast<std::size_t>(w)] < 0) continue;
      const auto i = static_cast<std::size_t>(slot[static_cast<std::size_t>(w)]);
      policy.add(stats[i], r);
      ++members[i];
    }

    std::vector<Open> open;
    std::vector<char> any_candidate(static_cast<std::size_t>(d), 0);
    for (std::size_t i = 0; i < level.size(); ++i) {
      const int id = level[i];
      if (depth >= max_depth || members[i] < 2 || policy.pure(stats[i])) {
        tree.nodes[static_cast<std::size_t>(id)].value = policy.leaf(stats[i]);
        continue;
      }
      Open o{id, stats[i], policy.score(stats[i]), std::vector<char>(static_cast<std::size_t>(d), 0),
             policy.empty()};
      for (const Index f : choose()) {
        o.candidate[static_cast<std::size_t>(f)] = 1;
        any_candidate[static_cast<std::size_t>(f)] = 1;
      }
      open.push_back(std::move(o));
    }
    slot.assign(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < open.size(); ++i) slot[static_cast<std::size_t>(open[i].node)] = static_cast<int>(i);

    auto right = policy.empty();
    for (Index f = 0; f < d; ++f) {
      if (!any_candidate[static_cast<std::size_t>(f)]) continue;
      for (auto& o : open) {
        o.left = policy.empty();
        o.prev = -1;
      }
      for (const Index r : sorted.order(f)) {
        const int w = where[static_cast<std::size_t>(r)];
        if (w < 0 || slot[static_cast<std::size_t>(w)] < 0) continue;
        auto& o = open[static_cast<std::size_t>(slot[static_cast<std::size_t>(w)])];
        if (!o.candidate[static_cast<std::size_t>(f)]) continue;
        if (o.prev >= 0 && X(r, f) > X(o.prev, f)) {
          policy.subtract(right, o.parent, o.left);
          const double gain = policy.score(o.left) + policy.score(right) - o.parent_score;
          if (gain > o.best_gain + (o.best_feature >= 0 ? kMinGain : 0.0)) {
            o.best_gain = gain;
            o.best_feature = static_cast<int>(f);
            o.best_threshold = midpoint(X(o.prev, f), X(r, f));
          }
        }
        policy.add(o.left, r);
        o.prev = r;
      }
    }

    std::vector<int> next;
    for (const auto& o : open) {
      if (o.best_feature < 0) {
        tree.nodes[static_cast<std::size_t>(o.node)].value = policy.leaf(o.parent);
        continue;
      }
      const int left_id = static_cast<int>(tree.nodes.size());
      const int right_id = left_id + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(o.node)];
      node.feature = o.best_feature;
      node.threshold = o.best_threshold;
      node.left = left_id;
      node.right = right_id;
      for (Index r = 0; r < n; ++r) {
        auto& w = where[static_cast<std::size_t>(r)];
        if (w == o.node) w = X(r, o.best_feature) < o.best_threshold ? left_id : right_id;
      }
      next.push_back(left_id);
      next.push_back(right_id);
    }
    level = std::move(next);
  }
  return tree;
}

void check_tree_inputs(const Eigen::MatrixXd& X, const Labels& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ProbeError("row count differs from label count");
  if (!X.allFinite()) throw ProbeError("non-finite feature value");
}

void check_dim(Index expected, Index got) {
  if (expected != got) {
    throw ProbeError("dimension mismatch: model expects " + std::to_string(expected) + " features, got " +
                     std::to_string(got));
  }
}

}  // namespace

DecisionTree grow_gini_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y,
                            std::span<const double> weights, int num_classes, int max_depth,
                            int features_per_split, CounterStream& stream) {
  const GiniPolicy policy{y, weights, num_classes};
  std::vector<int> where(static_cast<std::size_t>(X.rows()));
  for (std::size_t r = 0; r < where.size(); ++r) where[r] = weights[r] > 0.0 ? 0 : -1;
  const auto d = static_cast<std::size_t>(X.cols());
  const auto m = static_cast<std::size_t>(std::clamp<Index>(features_per_split, 1, X.cols()));
  std::vector<Index> pool(d);
  std::vector<Index> chosen;
  auto choose = [&]() -> const std::vector<Index>& {
    std::iota(pool.begin(), pool.end(), Index{0});
    if (m < d) {
      for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(stream.below(d - i));
        std::swap(pool[i], pool[j]);
      }
    }
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  };
  return grow(X, sorted, policy, std::move(where), max_depth, choose);
}

DecisionTree grow_gradient_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted,
                                std::span<const double> grad, std::span<const double> hess, int max_depth,
                                double lambda_leaf) {
  const GradientPolicy policy{grad, hess, lambda_leaf};
  std::vector<Index> all(static_cast<std::size_t>(X.cols()));
  std::iota(all.begin(), all.end(), Index{0});
  auto choose = [&]() -> const std::vector<Index>& { return all; };
  return grow(X, sorted, policy, std::vector<int>(static_cast<std::size_t>(X.rows()), 0), max_depth, choose);
}

ForestModel train_random_forest(const Eigen::MatrixXd& X, const Labels& y, const ForestConfig& cfg, int workers) {
  return train_random_forest(X, SortedColumns(X), y, cfg, workers);
}

ForestModel train_random_forest(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y,
                                const ForestConfig& cfg, int workers) {
  check_tree_inputs(X, y);
  if (cfg.n_trees < 1) throw ProbeError("random forest needs n_trees >= 1");
  if (cfg.max_depth < 0) throw ProbeError("random forest needs max_depth >= 0");
  const int k = checked_num_classes(y);
  const Index d = X.cols();
  const int fps = cfg.features_per_split.value_or(
      std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d))))));
  if (fps < 1) throw ProbeError("features_per_split must be >= 1");

  ForestModel model;
  model.config = cfg;
  model.features_per_split = static_cast<int>(std::min<Index>(fps, d));
  model.num_classes = k;
  model.dim = d;
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

  const Index n = X.rows();
  parallel_for(cfg.n_trees, workers, [&](Index t) {
    CounterStream stream(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<double> weights(static_cast<std::size_t>(n), 0.0);
    for (Index i = 0; i < n; ++i) weights[static_cast<std::size_t>(stream.below(static_cast<std::uint64_t>(n)))] += 1.0;
    model.trees[static_cast<std::size_t>(t)] =
        grow_gini_tree(X, sorted, y, weights, k, cfg.max_depth, model.features_per_split, stream);
  });
  return model;
}

Eigen::VectorXd forest_scores(const ForestModel& model, const Eigen::VectorXd& x) {
  check_dim(model.dim, x.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.num_classes);
  for (const auto& tree : model.trees) sum += tree.predict(x);
  return sum / static_cast<double>(model.trees.size());
}

GbtModel train_gbt(const Eigen::MatrixXd& X, const Labels& y, const GbtConfig& cfg) {
  return train_gbt(X, SortedColumns(X), y, cfg);
}

GbtModel train_gbt(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y, const GbtConfig& cfg) {
  check_tree_inputs(X, y);
  if (cfg.n_rounds < 1) throw ProbeError("gbt needs n_rounds >= 1");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ProbeError("gbt needs learning_rate >= 0");
  }
  if (cfg.max_depth < 0) throw ProbeError("gbt needs max_depth >= 0");
  if (!(cfg.lambda_leaf >= 0.0)) throw ProbeError("gbt needs lambda_leaf >= 0");
  const int k = checked_num_classes(y);
  const Index n = X.rows();

  GbtModel model;
  model.config = cfg;
  model.dim = X.cols();
  const auto counts = class_counts(y, k);
  model.base_score.resize(k);
  for (int c = 0; c < k; ++c) {
    model.base_score(c) = std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(n));
  }

  Eigen::MatrixXd logits = model.base_score.transpose().replicate(n, 1);
  auto mean_loss = [&]() {
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double mx = logits.row(i).maxCoeff();
      loss += mx + std::log((logits.row(i).array() - mx).exp().sum()) - logits(i, y[static_cast<std::size_t>(i)]);
    }
    return loss / static_cast<double>(n);
  };
  model.train_loss.push_back(mean_loss());

  std::vector<double> grad(static_cast<std::size_t>(n));
  std::vector<double> hess(static_cast<std::size_t>(n));
  for (int round = 0; round < cfg.n_rounds; ++round) {
    Eigen::MatrixXd prob(n, k);
    for (Index i = 0; i < n; ++i) prob.row(i) = softmax(logits.row(i).transpose()).transpose();
    std::vector<DecisionTree> stage;
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, k);
    for (int c = 0; c < k; ++c) {
      for (Index i = 0; i < n; ++i) {
        const double p = prob(i, c);
        grad[static_cast<std::size_t>(i)] = p - (y[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0);
        hess[static_cast<std::size_t>(i)] = std::max(p * (1.0 - p), 1e-16);
      }
      stage.push_back(grow_gradient_tree(X, sorted, grad, hess, cfg.max_depth, cfg.lambda_leaf));
      for (Index i = 0; i < n; ++i) update(i, c) = stage.back().predict(X.row(i).transpose())(0);
    }
    logits += cfg.learning_rate * update;
    model.stage_trees.push_back(std::move(stage));
    model.train_loss.push_back(mean_loss());
  }
  return model;
}

Eigen::VectorXd gbt_scores(const GbtModel& model, const Eigen::VectorXd& x) {
  check_dim(model.dim, x.size());
  Eigen::VectorXd out = model.base_score;
  for (const auto& stage : model.stage_trees) {
    for (std::size_t c = 0; c < stage.size(); ++c) {
      out(static_cast<Index>(c)) += model.config.learning_rate * stage[c].predict(x)(0);
    }
  }
  return out;
}

nlohmann::json to_json(const DecisionTree& tree) {
  auto nodes = nlohmann::json::array();
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) {
      nodes.push_back({{"value", std::vector<double>(node.value.begin(), node.value.end())}});
    } else {
      nodes.push_back({{"feature", node.feature},
                       {"threshold", node.threshold},
                       {"left", node.left},
                       {"right", node.right}});
    }
  }
  return {{"max_depth", tree.max_depth}, {"nodes", nodes}};
}

nlohmann::json to_json(const ForestModel& model) {
  auto trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(to_json(t));
  return {{"family", "random_forest"},
          {"config",
           {{"n_trees", model.config.n_trees},
            {"max_depth", model.config.max_depth},
            {"features_per_split", model.features_per_split},
            {"seed", model.config.seed}}},
          {"trees", trees}};
}

nlohmann::json to_json(const GbtModel& model) {
  auto stages = nlohmann::json::array();
  for (const auto& stage : model.stage_trees) {
    auto s = nlohmann::json::array();
    for (const auto& t : stage) s.push_back(to_json(t));
    stages.push_back(s);
  }
  return {{"family", "gbt"},
          {"config",
           {{"n_rounds", model.config.n_rounds},
            {"learning_rate", model.config.learning_rate},
            {"max_depth", model.config.max_depth},
            {"lambda_leaf", model.config.lambda_leaf},
            {"seed", model.config.seed}}},
          {"base_score", std::vector<double>(model.base_score.begin(), model.base_score.end())},
          {"stage_trees", stages}};
}

}  // namespace probe_bench

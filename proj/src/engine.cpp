#include "probe_bench/engine.hpp"

#include <map>

#include "probe_bench/errors.hpp"
#include "probe_bench/parallel.hpp"

namespace probe_bench {

std::string_view family_name(ProbeFamily family) {
  switch (family) {
    case ProbeFamily::kLogistic: return "logistic";
    case ProbeFamily::kLinearSvm: return "linear_svm";
    case ProbeFamily::kRandomForest: return "random_forest";
    case ProbeFamily::kGbt: return "gbt";
  }
  return "?";
}

std::optional<ProbeFamily> parse_family(std::string_view name) {
  for (auto f : {ProbeFamily::kLogistic, ProbeFamily::kLinearSvm, ProbeFamily::kRandomForest, ProbeFamily::kGbt}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

ProbeSpec ProbeSpec::defaults(ProbeFamily family) {
  ProbeSpec spec;
  spec.family = family;
  switch (family) {
    case ProbeFamily::kLogistic:
      spec.config = LogisticConfig{};
      spec.name = "Logistic";
      break;
    case ProbeFamily::kLinearSvm:
      spec.config = LinearSvmConfig{};
      spec.name = "Linear SVM";
      break;
    case ProbeFamily::kRandomForest:
      spec.config = ForestConfig{};
      spec.name = "Random Forest";
      break;
    case ProbeFamily::kGbt:
      spec.config = GbtConfig{};
      spec.name = "GBT";
      break;
  }
  return spec;
}

EvalDataset make_eval_dataset(AlignedDataset data, std::string encoder_name) {
  return {std::move(encoder_name), std::move(data), std::nullopt};
}

EvalDataset make_classical_eval_dataset(AlignedDataset data, const HistogramTable& table, std::string encoder_name) {
  if (data.X.cols() != kClassicalDim) {
    throw DataError("classical source must have " + std::to_string(kClassicalDim) + " columns, got " +
                    std::to_string(data.X.cols()));
  }
  std::map<std::string, Index> rows;
  for (std::size_t i = 0; i < table.ids.size(); ++i) rows.emplace(table.ids[i], static_cast<Index>(i));
  HistogramTable aligned;
  aligned.s.resize(data.size(), table.s.cols());
  aligned.v.resize(data.size(), table.v.cols());
  for (Index i = 0; i < data.size(); ++i) {
    const auto& id = data.ids[static_cast<std::size_t>(i)];
    const auto it = rows.find(id);
    if (it == rows.end()) throw DataError("histogram table has no row for " + id);
    aligned.ids.push_back(id);
    aligned.s.row(i) = table.s.row(it->second);
    aligned.v.row(i) = table.v.row(it->second);
  }
  return {std::move(encoder_name), std::move(data), std::move(aligned)};
}

namespace {

/// Doubles a per-fold cache may hold before scorers fall back to on-demand work.
constexpr double kFoldCacheBudget = 2.5e8;

struct FoldData {
  Eigen::MatrixXd X_train;
  Labels y_train;
  Eigen::VectorXd x_test;
};

struct FoldCache {
  Eigen::MatrixXd X_train;
  Eigen::VectorXd x_test;
  std::optional<LinearDesign> design;
  std::optional<SortedColumns> sorted;
};

bool is_linear(ProbeFamily f) { return f == ProbeFamily::kLogistic || f == ProbeFamily::kLinearSvm; }

class ProbeFoldScorer final : public FoldScorer {
 public:
  ProbeFoldScorer(const EvalDataset& data, const ProbeSpec& probe, int workers) : data_(data), probe_(probe) {
    const Index n = data_.size();
    if (n < 2) throw DataError("LOOCV needs at least two rows");
    k_ = checked_classes(data_.data.y);
    const double cache_doubles =
        static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(data_.data.X.cols()) * 2.0;
    if (!data_.histograms && cache_doubles <= kFoldCacheBudget) {
      cache_.resize(static_cast<std::size_t>(n));
      parallel_for(n, workers, [&](Index i) {
        FoldCache c;
        c.X_train = without_row(data_.data.X, i);
        c.x_test = data_.data.X.row(i).transpose();
        if (is_linear(probe_.family)) {
          c.design.emplace(c.X_train);
          c.x_test = c.design->map(c.x_test);
          c.X_train.resize(0, 0);
        } else {
          c.sorted.emplace(c.X_train);
        }
        cache_[static_cast<std::size_t>(i)] = std::move(c);
      });
    }
  }

  Index size() const override { return data_.size(); }
  int num_classes() const override { return k_; }

  FoldScore score_fold(Index held_out, const Labels& labels) const override {
    Labels y_train;
    y_train.reserve(labels.size() - 1);
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (static_cast<Index>(r) != held_out) y_train.push_back(labels[r]);
    }
    if (!cache_.empty()) {
      const auto& c = cache_[static_cast<std::size_t>(held_out)];
      if (c.design) return {score_linear(c.design->train(), y_train, c.x_test), c.design->train().rows()};
      return {score_tree(c.X_train, *c.sorted, y_train, c.x_test), c.X_train.rows()};
    }
    const FoldData fold = build_fold(held_out, labels, std::move(y_train));
    if (is_linear(probe_.family)) {
      const LinearDesign design(fold.X_train);
      return {score_linear(design.train(), fold.y_train, design.map(fold.x_test)), fold.X_train.rows()};
    }
    return {score_tree(fold.X_train, SortedColumns(fold.X_train), fold.y_train, fold.x_test), fold.X_train.rows()};
  }

 private:
  static int checked_classes(const Labels& y) {
    if (y.empty()) throw DataError("empty label vector");
    return *std::max_element(y.begin(), y.end()) + 1;
  }

  static Eigen::MatrixXd without_row(const Eigen::MatrixXd& X, Index row) {
    Eigen::MatrixXd out(X.rows() - 1, X.cols());
    out.topRows(row) = X.topRows(row);
    out.bottomRows(X.rows() - row - 1) = X.bottomRows(X.rows() - row - 1);
    return out;
  }

  FoldData build_fold(Index held_out, const Labels& labels, Labels y_train) const {
    Eigen::MatrixXd X = data_.data.X;
    if (data_.histograms) {
      std::vector<Index> rows;
      for (Index r = 0; r < X.rows(); ++r) {
        if (r != held_out) rows.push_back(r);
      }
      const auto& h = *data_.histograms;
      const ClassReferences refs = class_reference_histograms(h.s, h.v, labels, rows);
      for (Index r = 0; r < X.rows(); ++r) {
        X.row(r).tail<6>() = reference_distances(h.s.row(r).transpose(), h.v.row(r).transpose(), refs).transpose();
      }
    }
    return {without_row(X, held_out), std::move(y_train), X.row(held_out).transpose()};
  }

  Eigen::VectorXd score_linear(const Eigen::MatrixXd& train, const Labels& y, const Eigen::VectorXd& test) const {
    const int k = checked_num_classes(y);
    if (const auto* cfg = std::get_if<LogisticConfig>(&probe_.config)) {
      const double lambda = cfg->lambda.value_or(1.0 / static_cast<double>(train.rows()));
      const LinearFit fit = fit_softmax(train, y, k, lambda, cfg->solver);
      return fit.W * test + fit.b;
    }
    const auto& cfg = std::get<LinearSvmConfig>(probe_.config);
    if (!(cfg.c > 0.0)) throw ProbeError("SVM C must be > 0");
    const LinearFit fit = fit_ovr_squared_hinge(train, y, k, cfg.c, cfg.solver);
    return fit.W * test + fit.b;
  }

  Eigen::VectorXd score_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted, const Labels& y,
                             const Eigen::VectorXd& test) const {
    if (const auto* cfg = std::get_if<ForestConfig>(&probe_.config)) {
      return forest_scores(train_random_forest(X, sorted, y, *cfg, 1), test);
    }
    return gbt_scores(train_gbt(X, sorted, y, std::get<GbtConfig>(probe_.config)), test);
  }

  EvalDataset data_;
  ProbeSpec probe_;
  int k_ = 0;
  std::vector<FoldCache> cache_;
};

void check_probe(const ProbeSpec& probe) {
  const bool ok = (probe.family == ProbeFamily::kLogistic && std::holds_alternative<LogisticConfig>(probe.config)) ||
                  (probe.family == ProbeFamily::kLinearSvm && std::holds_alternative<LinearSvmConfig>(probe.config)) ||
                  (probe.family == ProbeFamily::kRandomForest && std::holds_alternative<ForestConfig>(probe.config)) ||
                  (probe.family == ProbeFamily::kGbt && std::holds_alternative<GbtConfig>(probe.config));
  if (!ok) throw ConfigError("probe '" + probe.name + "': config does not match family");
}

}  // namespace

std::unique_ptr<FoldScorer> make_fold_scorer(const EvalDataset& data, const ProbeSpec& probe, int workers) {
  check_probe(probe);
  check_loocv_labels(data.data.y, *std::max_element(data.data.y.begin(), data.data.y.end()) + 1);
  return std::make_unique<ProbeFoldScorer>(data, probe, workers);
}

void check_loocv_labels(const Labels& labels, int num_classes) {
  const auto counts = class_counts(labels, num_classes);
  for (int k = 0; k < num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] < 2) {
      throw DataError("LOOCV needs every class to have >= 2 members; class " + std::to_string(k) + " has " +
                      std::to_string(counts[static_cast<std::size_t>(k)]));
    }
  }
}

PooledPredictions loocv_pool(const FoldScorer& scorer, const std::vector<std::string>& ids, const Labels& labels,
                             int workers, std::vector<Index>* train_sizes) {
  const Index n = scorer.size();
  if (static_cast<Index>(labels.size()) != n) throw DataError("label count differs from dataset size");
  check_loocv_labels(labels, scorer.num_classes());
  Eigen::MatrixXd scores(n, scorer.num_classes());
  std::vector<Index> sizes(static_cast<std::size_t>(n));
  parallel_for(n, workers, [&](Index i) {
    FoldScore fs;
    try {
      fs = scorer.score_fold(i, labels);
    } catch (const std::exception& e) {
      throw ProbeError("fold " + std::to_string(i) + ": " + e.what());
    }
    if (fs.scores.size() != scorer.num_classes() || !fs.scores.allFinite()) {
      throw ProbeError("fold " + std::to_string(i) + ": probe returned invalid scores");
    }
    scores.row(i) = fs.scores.transpose();
    sizes[static_cast<std::size_t>(i)] = fs.train_size;
  });
  if (train_sizes != nullptr) *train_sizes = std::move(sizes);
  return PooledPredictions::from_scores(ids, labels, std::move(scores));
}

LoocvResult run_loocv(const FoldScorer& scorer, const std::vector<std::string>& ids, const Labels& labels,
                      const ProbeSpec& probe, int workers) {
  LoocvResult result;
  result.probe = probe;
  result.pooled = loocv_pool(scorer, ids, labels, workers, &result.fold_train_sizes);
  result.metrics = compute_metrics(result.pooled);
  result.per_fold_train_size = scorer.size() - 1;
  return result;
}

LoocvResult run_loocv(const EvalDataset& data, const ProbeSpec& probe, int workers) {
  const auto scorer = make_fold_scorer(data, probe, workers);
  return run_loocv(*scorer, data.data.ids, data.data.y, probe, workers);
}

LoocvResult run_loocv(const AlignedDataset& data, const ProbeSpec& probe, int workers) {
  return run_loocv(make_eval_dataset(data), probe, workers);
}

Labels permuted_labels(const Labels& labels, std::uint64_t seed, std::uint64_t j) {
  Labels out = labels;
  CounterStream stream(derive_seed(seed, j));
  fisher_yates(std::span<int>(out), stream);
  return out;
}

void finalize_p_values(PermutationResult& result) {
  std::size_t at_least = 0;
  for (double v : result.null_aucs) at_least += v >= result.observed_auc ? 1 : 0;
  const auto n = static_cast<double>(result.null_aucs.size());
  result.n_perm = static_cast<int>(result.null_aucs.size());
  result.p_value = static_cast<double>(at_least) / n;
  result.p_value_conservative = (static_cast<double>(at_least) + 1.0) / (n + 1.0);
}

std::vector<double> permutation_null(const FoldScorer& scorer, const Labels& labels, int n_perm, std::uint64_t seed,
                                     int workers) {
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  std::vector<double> nulls(static_cast<std::size_t>(n_perm));
  const std::vector<std::string> no_ids(labels.size());
  parallel_for(n_perm, workers, [&](Index j) {
    const Labels shuffled = permuted_labels(labels, seed, static_cast<std::uint64_t>(j));
    try {
      nulls[static_cast<std::size_t>(j)] = macro_ovr_auc(loocv_pool(scorer, no_ids, shuffled, 1));
    } catch (const std::exception& e) {
      throw ProbeError("permutation " + std::to_string(j) + ": " + e.what());
    }
  });
  return nulls;
}

PermutationResult permutation_test(const FoldScorer& scorer, const std::vector<std::string>& ids,
                                   const Labels& labels, int n_perm, std::uint64_t seed, int workers) {
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  PermutationResult result;
  result.seed = seed;
  result.observed_auc = macro_ovr_auc(loocv_pool(scorer, ids, labels, workers));
  result.null_aucs = permutation_null(scorer, labels, n_perm, seed, workers);
  finalize_p_values(result);
  return result;
}

PermutationResult permutation_test(const EvalDataset& data, const ProbeSpec& probe, int n_perm, std::uint64_t seed,
                                   int workers) {
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  const auto scorer = make_fold_scorer(data, probe, workers);
  return permutation_test(*scorer, data.data.ids, data.data.y, n_perm, seed, workers);
}

PermutationResult permutation_test(const AlignedDataset& data, const ProbeSpec& probe, int n_perm,
                                   std::uint64_t seed, int workers) {
  return permutation_test(make_eval_dataset(data), probe, n_perm, seed, workers);
}

StudyReport run_study(const DatasetManifest& manifest, const std::vector<StudySource>& sources,
                      const std::vector<ProbeSpec>& probes, int n_perm, std::uint64_t seed, int workers) {
  if (sources.empty()) throw ConfigError("study needs at least one embedding source");
  if (probes.empty()) throw ConfigError("study needs at least one probe");
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1");
  for (const auto& p : probes) check_probe(p);

  StudyReport report;
  for (const auto& p : probes) report.probes.push_back(p.name);
  report.provenance.seed = seed;
  report.provenance.n_perm = n_perm;

  for (const auto& source : sources) {
    report.encoders.push_back(source.name);
    AlignedDataset aligned = align(manifest, source.embeddings);
    const EvalDataset data = source.histograms
                                 ? make_classical_eval_dataset(std::move(aligned), *source.histograms, source.name)
                                 : make_eval_dataset(std::move(aligned), source.name);
    for (const auto& probe : probes) {
      const auto scorer = make_fold_scorer(data, probe, workers);
      const LoocvResult loocv = run_loocv(*scorer, data.data.ids, data.data.y, probe, workers);
      StudyCell cell{source.name, probe.name, loocv.metrics, std::nullopt};
      if (!source.control) {
        PermutationResult perm;
        perm.seed = seed;
        perm.observed_auc = loocv.metrics.macro_auc;
        perm.null_aucs = permutation_null(*scorer, data.data.y, n_perm, seed, workers);
        finalize_p_values(perm);
        cell.permutation = std::move(perm);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace probe_bench

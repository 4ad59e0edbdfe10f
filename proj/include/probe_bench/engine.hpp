#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "probe_bench/classical.hpp"
#include "probe_bench/dataset.hpp"
#include "probe_bench/linear.hpp"
#include "probe_bench/metrics.hpp"
#include "probe_bench/perturbation.hpp"
#include "probe_bench/tree.hpp"

namespace probe_bench {

enum class ProbeFamily { kLogistic, kLinearSvm, kRandomForest, kGbt };

std::string_view family_name(ProbeFamily family);
std::optional<ProbeFamily> parse_family(std::string_view name);

struct ProbeSpec {
  using Config = std::variant<LogisticConfig, LinearSvmConfig, ForestConfig, GbtConfig>;

  ProbeFamily family = ProbeFamily::kLogistic;
  Config config = LogisticConfig{};
  std::string name;

  /// Family defaults with a human-readable display name ("Logistic", "Linear SVM", ...).
  static ProbeSpec defaults(ProbeFamily family);
};

/// Features and labels for one encoder. When `histograms` is set, X holds the
/// 14 classical columns and columns 8..13 (reference distances) are rebuilt
/// from each training fold's own class references.
struct EvalDataset {
  std::string encoder_name;
  AlignedDataset data;
  std::optional<HistogramTable> histograms;  // rows aligned with data

  Index size() const { return data.size(); }
};

EvalDataset make_eval_dataset(AlignedDataset data, std::string encoder_name = {});

/// Aligns a histogram table to the dataset's id order (classical sources).
EvalDataset make_classical_eval_dataset(AlignedDataset data, const HistogramTable& table,
                                        std::string encoder_name = "classical-14");

struct FoldScore {
  Eigen::VectorXd scores;
  Index train_size = 0;
};

/// Trains on every row except `held_out` (with the given labels) and scores
/// the held-out row. Label-independent per-fold work is done once at
/// construction; score_fold is const and safe to call concurrently.
class FoldScorer {
 public:
  virtual ~FoldScorer() = default;
  virtual Index size() const = 0;
  virtual int num_classes() const = 0;
  virtual FoldScore score_fold(Index held_out, const Labels& labels) const = 0;
};

std::unique_ptr<FoldScorer> make_fold_scorer(const EvalDataset& data, const ProbeSpec& probe, int workers = 1);

struct LoocvResult {
  ProbeSpec probe;
  PooledPredictions pooled;
  MetricBundle metrics;
  Index per_fold_train_size = 0;
  std::vector<Index> fold_train_sizes;  // one entry per fold, as trained
};

/// Throws DataError unless every class in [0, K) has at least two rows.
void check_loocv_labels(const Labels& labels, int num_classes);

/// Pooled held-out scores for `labels`; folds run on `workers` threads.
PooledPredictions loocv_pool(const FoldScorer& scorer, const std::vector<std::string>& ids, const Labels& labels,
                             int workers, std::vector<Index>* train_sizes = nullptr);

LoocvResult run_loocv(const FoldScorer& scorer, const std::vector<std::string>& ids, const Labels& labels,
                      const ProbeSpec& probe, int workers = 1);
LoocvResult run_loocv(const EvalDataset& data, const ProbeSpec& probe, int workers = 1);
LoocvResult run_loocv(const AlignedDataset& data, const ProbeSpec& probe, int workers = 1);

struct PermutationResult {
  double observed_auc = 0.0;
  std::vector<double> null_aucs;  // indexed by permutation
  double p_value = 0.0;               // #{null >= observed} / n_perm
  double p_value_conservative = 0.0;  // (#{null >= observed} + 1) / (n_perm + 1)
  int n_perm = 0;
  std::uint64_t seed = 0;
};

/// Labels of permutation j: Fisher-Yates over the stream derive_seed(seed, j).
Labels permuted_labels(const Labels& labels, std::uint64_t seed, std::uint64_t j);

/// Fills both p-values of `result` from its null sample and observed AUC.
void finalize_p_values(PermutationResult& result);

/// Null macro AUCs, one full LOOCV per permutation; permutations run on
/// `workers` threads and land at their own index.
std::vector<double> permutation_null(const FoldScorer& scorer, const Labels& labels, int n_perm, std::uint64_t seed,
                                     int workers);

PermutationResult permutation_test(const FoldScorer& scorer, const std::vector<std::string>& ids,
                                   const Labels& labels, int n_perm, std::uint64_t seed, int workers = 1);
PermutationResult permutation_test(const EvalDataset& data, const ProbeSpec& probe, int n_perm, std::uint64_t seed,
                                   int workers = 1);
PermutationResult permutation_test(const AlignedDataset& data, const ProbeSpec& probe, int n_perm,
                                   std::uint64_t seed, int workers = 1);

struct StudySource {
  std::string name;
  EmbeddingSet embeddings;
  std::optional<HistogramTable> histograms;
  bool control = false;  // label-independent features: no p-value is reported
};

struct StudyCell {
  std::string encoder;
  std::string probe;
  MetricBundle metrics;
  std::optional<PermutationResult> permutation;
};

struct InputDigest {
  std::string path;
  std::string fnv1a64;
};

struct Provenance {
  std::string tool = "probe-bench";
  std::string version;
  std::uint64_t seed = 0;
  int n_perm = 0;
  std::string config_hash;
  std::vector<InputDigest> inputs;
};

struct PerturbationSection {
  std::string encoder;
  MarginReport report;
};

struct StudyReport {
  std::vector<std::string> encoders;
  std::vector<std::string> probes;
  std::vector<StudyCell> cells;  // encoder-major, probe-minor
  std::vector<PerturbationSection> perturbation;
  Provenance provenance;

  const StudyCell& cell(std::size_t encoder, std::size_t probe) const {
    return cells[encoder * probes.size() + probe];
  }
};

/// Full encoder x probe grid of LOOCV metrics with permutation p-values
/// (omitted for control sources). Every cell uses the same permutation seed.
StudyReport run_study(const DatasetManifest& manifest, const std::vector<StudySource>& sources,
                      const std::vector<ProbeSpec>& probes, int n_perm, std::uint64_t seed, int workers = 1);

}  // namespace probe_bench

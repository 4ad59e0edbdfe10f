#include <map>

#include "doctest.h"
#include "probe_bench/engine.hpp"
#include "probe_bench/errors.hpp"
#include "support.hpp"

using namespace probe_bench;
using namespace probe_bench::testing;

namespace {

std::vector<ProbeSpec> all_probes() {
  std::vector<ProbeSpec> probes;
  for (auto f : {ProbeFamily::kLogistic, ProbeFamily::kLinearSvm, ProbeFamily::kRandomForest, ProbeFamily::kGbt}) {
    probes.push_back(ProbeSpec::defaults(f));
  }
  auto& forest = std::get<ForestConfig>(probes[2].config);
  forest.n_trees = 50;
  std::get<GbtConfig>(probes[3].config).n_rounds = 20;
  return probes;
}

/// Scores every fold with the same vector.
class ConstantScorer final : public FoldScorer {
 public:
  explicit ConstantScorer(Index n) : n_(n) {}
  Index size() const override { return n_; }
  int num_classes() const override { return 3; }
  FoldScore score_fold(Index, const Labels&) const override { return {Eigen::Vector3d(0.2, 0.5, 0.3), n_ - 1}; }

 private:
  Index n_;
};

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& X, Index row) {
  Eigen::MatrixXd out(X.rows() - 1, X.cols());
  Index r = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    if (i != row) out.row(r++) = X.row(i);
  }
  return out;
}

Labels drop_label(const Labels& y, Index row) {
  Labels out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (static_cast<Index>(i) != row) out.push_back(y[i]);
  }
  return out;
}

Eigen::MatrixXd random_histograms(Index rows, Index bins, std::uint64_t seed) {
  Eigen::MatrixXd h = normal_matrix(rows, bins, seed).array().abs().matrix();
  for (Index i = 0; i < rows; ++i) h.row(i) /= h.row(i).sum();
  return h;
}

}  // namespace

TEST_CASE("loocv runs one fold per specimen on n - 1 rows") {
  const Labels y = labels_21_9_7();
  const auto data = make_dataset(normal_matrix(37, 6, 1), y);
  for (const auto& probe : all_probes()) {
    const auto r = run_loocv(data, probe);
    CHECK(r.fold_train_sizes.size() == 37);
    for (Index s : r.fold_train_sizes) CHECK(s == 36);
    CHECK(r.per_fold_train_size == 36);
    CHECK(r.pooled.ids == data.ids);
    CHECK(r.pooled.labels == y);
    CHECK(r.pooled.scores.rows() == 37);
    CHECK(r.pooled.scores.cols() == 3);
  }
}

TEST_CASE("loocv pools held-out scores of independently trained models") {
  const Labels y = counts_labels({8, 7, 6});
  const Eigen::MatrixXd X = normal_matrix(21, 5, 2);
  const auto r = run_loocv(make_dataset(X, y), ProbeSpec::defaults(ProbeFamily::kLogistic));
  for (Index i = 0; i < 21; ++i) {
    const auto model = train_logistic(drop_row(X, i), drop_label(y, i));
    const Eigen::VectorXd expected = logistic_scores(model, X.row(i).transpose());
    CHECK((r.pooled.scores.row(i).transpose() - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("loocv separates one-hot class signal") {
  const Labels y = labels_21_9_7();
  Eigen::MatrixXd X = 0.1 * normal_matrix(37, 8, 3);
  for (std::size_t i = 0; i < y.size(); ++i) X(static_cast<Index>(i), y[i]) += 1.0;
  for (const auto& probe : all_probes()) {
    const auto r = run_loocv(make_dataset(X, y), probe);
    CHECK_MESSAGE(r.metrics.macro_auc >= 0.99, probe.name);
    CHECK(r.metrics.accuracy >= 0.95);
  }
}

TEST_CASE("loocv rejects a singleton class") {
  const Labels y = counts_labels({5, 4, 1});
  CHECK_THROWS_AS(run_loocv(make_dataset(normal_matrix(10, 3, 4), y), ProbeSpec::defaults(ProbeFamily::kLogistic)),
                  DataError);
  ProbeSpec bad = ProbeSpec::defaults(ProbeFamily::kGbt);
  bad.config = LogisticConfig{};
  CHECK_THROWS_AS(run_loocv(make_dataset(normal_matrix(9, 3, 4), counts_labels({3, 3, 3})), bad), ConfigError);
}

TEST_CASE("loocv is independent of the worker count") {
  const Labels y = labels_21_9_7();
  const auto data = make_dataset(normal_matrix(37, 50, 5), y);
  for (const auto& probe : all_probes()) {
    const auto a = run_loocv(data, probe, 1);
    const auto b = run_loocv(data, probe, 4);
    CHECK(a.pooled.scores == b.pooled.scores);
  }
}

TEST_CASE("permuted labels keep class counts") {
  const Labels y = labels_21_9_7();
  std::map<Labels, int> seen;
  for (std::uint64_t j = 0; j < 50; ++j) {
    const Labels p = permuted_labels(y, 9, j);
    CHECK(class_counts(p, 3) == class_counts(y, 3));
    CHECK(p == permuted_labels(y, 9, j));
    ++seen[p];
  }
  CHECK(seen.size() == 50);
  CHECK(permuted_labels(y, 10, 0) != permuted_labels(y, 9, 0));
}

TEST_CASE("p-values count nulls at or above the observed value") {
  PermutationResult r;
  r.observed_auc = 0.6;
  r.null_aucs = {0.4, 0.5, 0.6, 0.7};
  finalize_p_values(r);
  CHECK(r.n_perm == 4);
  CHECK(r.p_value == 0.5);
  CHECK(r.p_value_conservative == 0.6);
}

TEST_CASE("constant scores give p = 1") {
  const ConstantScorer scorer(37);
  const auto r = permutation_test(scorer, make_ids(37), labels_21_9_7(), 25, 1);
  CHECK(r.observed_auc == 0.5);
  for (double v : r.null_aucs) CHECK(v == 0.5);
  CHECK(r.p_value == 1.0);
  CHECK(r.p_value_conservative == 1.0);
  CHECK_THROWS_AS(permutation_test(scorer, make_ids(37), labels_21_9_7(), 0, 1), ConfigError);
}

TEST_CASE("permutation nulls equal loocv on permuted labels") {
  const Labels y = counts_labels({8, 7, 6});
  const Eigen::MatrixXd X = normal_matrix(21, 30, 6);
  const auto data = make_dataset(X, y);
  const auto probe = ProbeSpec::defaults(ProbeFamily::kLogistic);
  const auto r = permutation_test(data, probe, 6, 42);
  REQUIRE(r.null_aucs.size() == 6);
  for (std::uint64_t j = 0; j < 6; ++j) {
    const auto shuffled = make_dataset(X, permuted_labels(y, 42, j));
    CHECK(run_loocv(shuffled, probe).metrics.macro_auc == r.null_aucs[j]);
  }
  CHECK(r.observed_auc == run_loocv(data, probe).metrics.macro_auc);
  const auto parallel = permutation_test(data, probe, 6, 42, 4);
  CHECK(parallel.null_aucs == r.null_aucs);
  CHECK(parallel.p_value == r.p_value);
}

TEST_CASE("p-values react to signal strength") {
  const Labels y = labels_21_9_7();
  const auto probe = ProbeSpec::defaults(ProbeFamily::kLogistic);
  const auto strong = permutation_test(make_dataset(cluster_features(y, 20, 6.0, 7), y), probe, 40, 3);
  const auto weak = permutation_test(make_dataset(normal_matrix(37, 20, 7), y), probe, 40, 3);
  CHECK(strong.p_value == 0.0);
  CHECK(strong.p_value_conservative == doctest::Approx(1.0 / 41.0));
  CHECK(weak.p_value > strong.p_value);
}

TEST_CASE("classical folds rebuild reference distances from training labels") {
  const Labels y = counts_labels({6, 5, 4});
  const Index n = 15;
  HistogramTable table;
  table.ids = make_ids(n);
  table.s = random_histograms(n, 8, 11);
  table.v = random_histograms(n, 8, 12);
  Eigen::MatrixXd X = normal_matrix(n, kClassicalDim, 13);
  const auto data = make_classical_eval_dataset(make_dataset(X, y), table);
  const auto probe = ProbeSpec::defaults(ProbeFamily::kLogistic);
  const auto scorer = make_fold_scorer(data, probe);

  // Oracle: class means of the training rows, then -ln sum sqrt(h * ref).
  auto expected_fold = [&](Index held_out, const Labels& labels) {
    Eigen::MatrixXd refs_s = Eigen::MatrixXd::Zero(3, 8);
    Eigen::MatrixXd refs_v = Eigen::MatrixXd::Zero(3, 8);
    for (Index r = 0; r < n; ++r) {
      if (r == held_out) continue;
      refs_s.row(labels[static_cast<std::size_t>(r)]) += table.s.row(r);
      refs_v.row(labels[static_cast<std::size_t>(r)]) += table.v.row(r);
    }
    for (Index k = 0; k < 3; ++k) {
      refs_s.row(k) /= refs_s.row(k).sum();
      refs_v.row(k) /= refs_v.row(k).sum();
    }
    Eigen::MatrixXd full = X;
    for (Index r = 0; r < n; ++r) {
      for (Index k = 0; k < 3; ++k) {
        full(r, 8 + k) = -std::log(table.s.row(r).cwiseProduct(refs_s.row(k)).cwiseSqrt().sum());
        full(r, 11 + k) = -std::log(table.v.row(r).cwiseProduct(refs_v.row(k)).cwiseSqrt().sum());
      }
    }
    const auto model = train_logistic(drop_row(full, held_out), drop_label(labels, held_out));
    return logistic_scores(model, full.row(held_out).transpose());
  };

  for (const Labels& labels : {y, permuted_labels(y, 5, 0)}) {
    for (Index i = 0; i < n; ++i) {
      const auto got = scorer->score_fold(i, labels);
      CHECK(got.train_size == n - 1);
      CHECK((got.scores - expected_fold(i, labels)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  // The incoming distance columns are ignored.
  Eigen::MatrixXd garbage = X;
  garbage.rightCols(6).setConstant(123.0);
  const auto other = make_classical_eval_dataset(make_dataset(garbage, y), table);
  CHECK(run_loocv(other, probe).pooled.scores == run_loocv(data, probe).pooled.scores);

  CHECK_THROWS_AS(make_classical_eval_dataset(make_dataset(normal_matrix(n, 5, 1), y), table), DataError);
  HistogramTable partial = table;
  partial.ids[3] = "zz";
  CHECK_THROWS_AS(make_classical_eval_dataset(make_dataset(X, y), partial), DataError);
}

TEST_CASE("study grid") {
  const Labels y = counts_labels({7, 6, 5});
  std::vector<SpecimenRecord> records;
  const char* tokens[] = {"eye-clean", "moderate", "heavy"};
  for (std::size_t i = 0; i < y.size(); ++i) {
    records.push_back({"s" + std::to_string(i), *parse_class(tokens[y[i]]), std::nullopt, std::nullopt});
  }
  const DatasetManifest manifest(records);

  StudySource real;
  real.name = "clusters";
  real.embeddings.ids = make_ids(18);
  real.embeddings.values = cluster_features(y, 10, 5.0, 3);
  StudySource control;
  control.name = kGaussianControlName;
  control.embeddings = generate_gaussian_control(18, 10, 4);
  control.embeddings.ids = make_ids(18);
  control.control = true;

  std::vector<ProbeSpec> probes{ProbeSpec::defaults(ProbeFamily::kLogistic),
                                ProbeSpec::defaults(ProbeFamily::kLinearSvm)};
  const auto report = run_study(manifest, {real, control}, probes, 10, 8);
  CHECK(report.encoders == std::vector<std::string>{"clusters", kGaussianControlName});
  CHECK(report.probes == std::vector<std::string>{"Logistic", "Linear SVM"});
  REQUIRE(report.cells.size() == 4);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto& cell = report.cell(0, p);
    CHECK(cell.encoder == "clusters");
    REQUIRE(cell.permutation.has_value());
    const auto alone = permutation_test(align(manifest, real.embeddings), probes[p], 10, 8);
    CHECK(cell.permutation->null_aucs == alone.null_aucs);
    CHECK(cell.metrics.macro_auc == alone.observed_auc);
    CHECK_FALSE(report.cell(1, p).permutation.has_value());
  }
  CHECK(report.provenance.n_perm == 10);
  CHECK(report.provenance.seed == 8);

  CHECK_THROWS_AS(run_study(manifest, {real}, {}, 10, 8), ConfigError);
  CHECK_THROWS_AS(run_study(manifest, {}, probes, 10, 8), ConfigError);
  CHECK_THROWS_AS(run_study(manifest, {real}, probes, 0, 8), ConfigError);
}

TEST_CASE("family names round-trip") {
  for (auto f : {ProbeFamily::kLogistic, ProbeFamily::kLinearSvm, ProbeFamily::kRandomForest, ProbeFamily::kGbt}) {
    CHECK(parse_family(family_name(f)) == f);
  }
  CHECK_FALSE(parse_family("mlp").has_value());
}

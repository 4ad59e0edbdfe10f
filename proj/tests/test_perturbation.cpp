#include "doctest.h"
#include "probe_bench/errors.hpp"
#include "probe_bench/perturbation.hpp"
#include "support.hpp"

using namespace probe_bench;
using namespace probe_bench::testing;

namespace {

LogisticModel identity_probe(Index d) {
  LogisticModel m;
  m.W = Eigen::MatrixXd::Identity(3, d);
  m.b = Eigen::VectorXd::Zero(3);
  m.scaler.mean = Eigen::RowVectorXd::Zero(d);
  m.scaler.scale = Eigen::RowVectorXd::Ones(d);
  return m;
}

EmbeddingPair make_pair(std::string id, Eigen::VectorXd clean, Eigen::VectorXd perturbed) {
  return {std::move(id), std::move(clean), std::move(perturbed)};
}

}  // namespace

TEST_CASE("eye-clean margin") {
  CHECK(eye_clean_margin(Eigen::Vector3d(2.0, 1.0, 0.5)) == 1.0);
  CHECK(eye_clean_margin(Eigen::Vector3d(0.0, 3.0, 1.0)) == -3.0);
  CHECK(eye_clean_margin(Eigen::Vector3d(1.0, 1.0, 1.0)) == 0.0);
  CHECK_THROWS_AS(eye_clean_margin(Eigen::VectorXd::Ones(1)), DataError);
}

TEST_CASE("margin report on hand-built pairs") {
  PairedEmbeddings pairs;
  pairs.encoder_name = "enc";
  pairs.skipped_unpaired = 2;
  pairs.pairs.push_back(make_pair("a", Eigen::Vector3d(2, 0, 0), Eigen::Vector3d(0.5, 1, 0)));
  pairs.pairs.push_back(make_pair("b", Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0.5, 0)));
  pairs.pairs.push_back(make_pair("c", Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, 1, 0)));
  const auto r = margin_drop_report(identity_probe(3), pairs);
  REQUIRE(r.per_specimen.size() == 3);
  CHECK(r.encoder_name == "enc");
  CHECK(r.skipped_unpaired == 2);
  CHECK(r.per_specimen[0].m_clean == 2.0);
  CHECK(r.per_specimen[0].m_perturbed == -0.5);
  CHECK(r.per_specimen[0].delta_m == 2.5);
  CHECK(r.per_specimen[0].reclassified);
  CHECK(r.per_specimen[1].delta_m == 0.5);
  CHECK_FALSE(r.per_specimen[1].reclassified);
  // A tie with the eye-clean logit stays eye-clean.
  CHECK(r.per_specimen[2].delta_m == 0.0);
  CHECK_FALSE(r.per_specimen[2].reclassified);
  CHECK(r.mean_delta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.std_delta == doctest::Approx(std::sqrt(3.5 / 3.0)).epsilon(1e-15));
  CHECK(r.reclass_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("margin aggregates match direct computation") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CounterStream s(seed);
    const Index d = 4;
    LogisticModel probe = identity_probe(d);
    probe.W = normal_matrix(3, d, seed);
    probe.b = normal_matrix(3, 1, seed + 100).col(0);
    PairedEmbeddings pairs;
    const Index n = 1 + static_cast<Index>(s.below(12));
    const Eigen::MatrixXd clean = normal_matrix(n, d, seed + 200);
    const Eigen::MatrixXd pert = normal_matrix(n, d, seed + 300);
    for (Index i = 0; i < n; ++i) {
      pairs.pairs.push_back(make_pair("p" + std::to_string(i), clean.row(i).transpose(), pert.row(i).transpose()));
    }
    const auto r = margin_drop_report(probe, pairs);

    std::vector<double> deltas;
    int switched = 0;
    for (Index i = 0; i < n; ++i) {
      const Eigen::VectorXd zc = probe.W * clean.row(i).transpose() + probe.b;
      const Eigen::VectorXd zp = probe.W * pert.row(i).transpose() + probe.b;
      const double mc = zc(0) - std::max(zc(1), zc(2));
      const double mp = zp(0) - std::max(zp(1), zp(2));
      deltas.push_back(mc - mp);
      switched += (zp(1) > zp(0) || zp(2) > zp(0)) ? 1 : 0;
    }
    double mean = 0.0;
    for (double v : deltas) mean += v / static_cast<double>(n);
    double var = 0.0;
    for (double v : deltas) var += (v - mean) * (v - mean) / static_cast<double>(n);
    CHECK(std::abs(r.mean_delta - mean) < 1e-12);
    CHECK(std::abs(r.std_delta - std::sqrt(var)) < 1e-12);
    CHECK(r.reclass_rate == static_cast<double>(switched) / static_cast<double>(n));
    // The rate is an exact multiple of 1/N.
    const double scaled = r.reclass_rate * static_cast<double>(n);
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);

    // Shifting every logit by the same amount leaves margins unchanged.
    LogisticModel shifted = probe;
    shifted.b.array() += 3.7;
    const auto rs = margin_drop_report(shifted, pairs);
    for (std::size_t i = 0; i < r.per_specimen.size(); ++i) {
      CHECK(std::abs(rs.per_specimen[i].delta_m - r.per_specimen[i].delta_m) < 1e-12);
      CHECK(rs.per_specimen[i].reclassified == r.per_specimen[i].reclassified);
    }
  }
}

TEST_CASE("margin report errors") {
  PairedEmbeddings empty;
  CHECK_THROWS_AS(margin_drop_report(identity_probe(3), empty), DataError);
  PairedEmbeddings wrong;
  wrong.pairs.push_back(make_pair("a", Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)));
  CHECK_THROWS_AS(margin_drop_report(identity_probe(3), wrong), DataError);
}

TEST_CASE("paired input splits originals from perturbed records") {
  // e0..e5 eye-clean (e0..e2 paired to x0..x2), m0..m2 moderate, h0..h1 heavy.
  std::vector<SpecimenRecord> records;
  for (int i = 0; i < 6; ++i) {
    SpecimenRecord r{"e" + std::to_string(i), ClassId::kEyeClean, std::nullopt, std::nullopt};
    if (i < 3) r.pair_id = "x" + std::to_string(i);
    records.push_back(r);
  }
  for (int i = 0; i < 3; ++i) records.push_back({"m" + std::to_string(i), ClassId::kModerate, {}, {}});
  for (int i = 0; i < 2; ++i) records.push_back({"h" + std::to_string(i), ClassId::kHeavy, {}, {}});
  for (int i = 0; i < 3; ++i) records.push_back({"x" + std::to_string(i), ClassId::kEyeClean, {}, {}});
  const DatasetManifest manifest(records);

  EmbeddingSet emb;
  emb.encoder_name = "enc";
  for (const auto& r : records) emb.ids.push_back(r.id);
  emb.values = normal_matrix(14, 5, 1);

  const auto input = build_paired_input(manifest, emb);
  CHECK(input.originals.size() == 11);
  for (const auto& id : input.originals.ids) CHECK(id[0] != 'x');
  CHECK(input.originals.y == counts_labels({6, 3, 2}));
  REQUIRE(input.pairs.pairs.size() == 3);
  CHECK(input.pairs.skipped_unpaired == 3);
  CHECK(input.pairs.encoder_name == "enc");
  CHECK(input.pairs.pairs[1].id == "e1");
  CHECK(input.pairs.pairs[1].clean == emb.values.row(1).transpose());
  CHECK(input.pairs.pairs[1].perturbed == emb.values.row(12).transpose());

  // The frozen probe sees only originals.
  const auto probe = train_frozen_probe_for_perturbation(input.originals);
  const auto direct = train_logistic(input.originals.X, input.originals.y);
  CHECK(probe.W == direct.W);

  EmbeddingSet missing = emb;
  missing.ids.pop_back();
  missing.values.conservativeResize(13, 5);
  CHECK_THROWS_AS(build_paired_input(manifest, missing), DataError);

  std::vector<SpecimenRecord> unpaired(records.begin(), records.begin() + 11);
  for (auto& r : unpaired) r.pair_id.reset();
  CHECK_THROWS_AS(build_paired_input(DatasetManifest(unpaired), emb), DataError);
}

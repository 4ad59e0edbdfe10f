#pragma once

#include <string>
#include <vector>

#include "probe_bench/dataset.hpp"
#include "probe_bench/linear.hpp"

namespace probe_bench {

/// Clean and edited embeddings of the same eye-clean specimen.
struct EmbeddingPair {
  std::string id;  // clean-side specimen id
  Eigen::VectorXd clean;
  Eigen::VectorXd perturbed;
};

struct PairedEmbeddings {
  std::string encoder_name;
  std::vector<EmbeddingPair> pairs;
  std::size_t skipped_unpaired = 0;  // eye-clean originals without a perturbed counterpart
};

struct MarginRow {
  std::string id;
  double m_clean = 0.0;
  double m_perturbed = 0.0;
  double delta_m = 0.0;  // m_clean - m_perturbed; positive means closer to the boundary
  bool reclassified = false;
};

struct MarginReport {
  std::string encoder_name;
  std::vector<MarginRow> per_specimen;
  double mean_delta = 0.0;
  double std_delta = 0.0;  // population
  double reclass_rate = 0.0;
  std::size_t skipped_unpaired = 0;
};

/// z_0 - max_{k != 0} z_k.
double eye_clean_margin(const Eigen::Ref<const Eigen::VectorXd>& logits);

MarginReport margin_drop_report(const LogisticModel& probe, const PairedEmbeddings& pairs);

/// Aggregates (mean, population std, reclassification rate) from rows.
void summarize(MarginReport& report);

/// One logistic model on every original (non-perturbed) specimen.
LogisticModel train_frozen_probe_for_perturbation(const AlignedDataset& data, const LogisticConfig& cfg = {});

/// Splits a paired manifest into the originals (training rows) and the
/// clean/perturbed pairs. Records named by some pair_id are the perturbed
/// side and never enter training.
struct PairedStudyInput {
  AlignedDataset originals;
  PairedEmbeddings pairs;
};

PairedStudyInput build_paired_input(const DatasetManifest& manifest, const EmbeddingSet& emb);

}  // namespace probe_bench

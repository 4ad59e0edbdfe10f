#include "probe_bench/perturbation.hpp"

#include <cmath>
#include <set>

#include "probe_bench/errors.hpp"

namespace probe_bench {

double eye_clean_margin(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  if (logits.size() < 2) throw DataError("eye_clean_margin needs at least two logits");
  return logits(0) - logits.tail(logits.size() - 1).maxCoeff();
}

void summarize(MarginReport& report) {
  const auto n = static_cast<double>(report.per_specimen.size());
  double sum = 0.0;
  std::size_t switched = 0;
  for (const auto& row : report.per_specimen) {
    sum += row.delta_m;
    switched += row.reclassified ? 1 : 0;
  }
  report.mean_delta = sum / n;
  double sq = 0.0;
  for (const auto& row : report.per_specimen) sq += (row.delta_m - report.mean_delta) * (row.delta_m - report.mean_delta);
  report.std_delta = std::sqrt(sq / n);
  report.reclass_rate = static_cast<double>(switched) / n;
}

MarginReport margin_drop_report(const LogisticModel& probe, const PairedEmbeddings& pairs) {
  if (pairs.pairs.empty()) throw DataError("margin report needs at least one clean/perturbed pair");
  MarginReport report;
  report.encoder_name = pairs.encoder_name;
  report.skipped_unpaired = pairs.skipped_unpaired;
  for (const auto& pair : pairs.pairs) {
    if (pair.clean.size() != probe.W.cols() || pair.perturbed.size() != probe.W.cols()) {
      throw DataError("pair " + pair.id + ": embedding dimension does not match the probe");
    }
    const Eigen::VectorXd z_clean = logistic_scores(probe, pair.clean);
    const Eigen::VectorXd z_pert = logistic_scores(probe, pair.perturbed);
    MarginRow row;
    row.id = pair.id;
    row.m_clean = eye_clean_margin(z_clean);
    row.m_perturbed = eye_clean_margin(z_pert);
    row.delta_m = row.m_clean - row.m_perturbed;
    row.reclassified = argmax_lowest(z_pert) != to_int(ClassId::kEyeClean);
    report.per_specimen.push_back(std::move(row));
  }
  summarize(report);
  return report;
}

LogisticModel train_frozen_probe_for_perturbation(const AlignedDataset& data, const LogisticConfig& cfg) {
  return train_logistic(data.X, data.y, cfg);
}

PairedStudyInput build_paired_input(const DatasetManifest& manifest, const EmbeddingSet& emb) {
  const auto perturbed = manifest.perturbed_ids();
  const std::set<std::string> perturbed_set(perturbed.begin(), perturbed.end());

  std::vector<SpecimenRecord> originals;
  for (const auto& r : manifest.records()) {
    if (!perturbed_set.contains(r.id)) originals.push_back(r);
  }
  for (auto& r : originals) r.pair_id.reset();
  PairedStudyInput out;
  out.originals = align(DatasetManifest(originals), emb);
  out.pairs.encoder_name = emb.encoder_name;

  for (const auto& r : manifest.records()) {
    if (perturbed_set.contains(r.id)) continue;
    if (r.label != ClassId::kEyeClean) continue;
    if (!r.pair_id) {
      ++out.pairs.skipped_unpaired;
      continue;
    }
    const auto clean_row = emb.find(r.id);
    const auto pert_row = emb.find(*r.pair_id);
    if (!clean_row || !pert_row) {
      throw DataError("embeddings missing for pair " + r.id + " -> " + *r.pair_id);
    }
    out.pairs.pairs.push_back({r.id, emb.values.row(*clean_row).transpose(), emb.values.row(*pert_row).transpose()});
  }
  if (out.pairs.pairs.empty()) throw DataError("no clean/perturbed pairs after skipping unpaired specimens");
  return out;
}

}  // namespace probe_bench

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probe_bench/types.hpp"

namespace probe_bench {

struct SpecimenRecord {
  std::string id;
  ClassId label = ClassId::kEyeClean;
  std::optional<std::string> image_path;
  std::optional<std::string> pair_id;
};

/// Validated specimen list. Every class has at least two members so that each
/// leave-one-out training fold still contains every class.
class DatasetManifest {
 public:
  explicit DatasetManifest(std::vector<SpecimenRecord> records);

  const std::vector<SpecimenRecord>& records() const { return records_; }
  const std::array<int, kNumClasses>& class_counts() const { return counts_; }
  std::size_t size() const { return records_.size(); }

  /// Position of `id`, if present.
  std::optional<std::size_t> find(const std::string& id) const;

  /// Ids that some other record names as its pair_id (the perturbed side).
  std::vector<std::string> perturbed_ids() const;

 private:
  std::vector<SpecimenRecord> records_;
  std::array<int, kNumClasses> counts_{};
  std::map<std::string, std::size_t> index_;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Frozen encoder outputs keyed by specimen id. Rows keep file order.
struct EmbeddingSet {
  std::string encoder_name;
  std::vector<std::string> ids;
  Eigen::MatrixXd values;  // one row per id

  Index dim() const { return values.cols(); }
  std::optional<Index> find(const std::string& id) const;
};

EmbeddingSet load_embeddings(const std::filesystem::path& path);

/// `id,f0,...` CSV with shortest round-trip decimal formatting.
void write_embeddings(const EmbeddingSet& emb, const std::filesystem::path& path);

inline constexpr const char* kGaussianControlName = "gaussian-control";

/// n i.i.d. standard normal vectors of length d; entry (i, j) is normal draw
/// i*d + j of the stream keyed by `seed`. Ids are "g0", "g1", ...
EmbeddingSet generate_gaussian_control(Index n, Index d, std::uint64_t seed);

/// Embeddings reordered to manifest order with labels attached.
struct AlignedDataset {
  Eigen::MatrixXd X;
  Labels y;
  std::vector<std::string> ids;
  std::size_t extra_ids = 0;  // embedding ids not in the manifest

  Index size() const { return X.rows(); }
};

/// Errors listing every manifest id missing from `emb`.
AlignedDataset align(const DatasetManifest& manifest, const EmbeddingSet& emb);

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace probe_bench

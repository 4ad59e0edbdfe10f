#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "probe_bench/config.hpp"
#include "probe_bench/engine.hpp"

namespace probe_bench {

/// 14-dim classical vectors (references from all images) plus the per-image
/// histogram table for fold-internal reference refits.
struct ClassicalSet {
  EmbeddingSet features;
  HistogramTable histograms;
  std::vector<std::filesystem::path> images;
};

/// Image for each manifest record: image_dir / image_path, or
/// image_dir / <id>.{png,ppm} when image_path is empty.
std::filesystem::path resolve_image(const std::filesystem::path& image_dir, const SpecimenRecord& record);

ClassicalSet extract_classical_set(const DatasetManifest& manifest, const std::filesystem::path& image_dir,
                                   const ClassicalConfig& cfg = {});

/// Runs the study grid and optional perturbation section, writes the
/// requested formats to cfg.out_dir.
StudyReport cmd_run(const StudyConfig& cfg, std::ostream& log);

void cmd_extract_classical(const std::filesystem::path& image_dir, const std::filesystem::path& manifest,
                           const std::filesystem::path& out_path);

void cmd_gaussian(Index n, Index d, std::uint64_t seed, const std::filesystem::path& out_path);

std::vector<PerturbationSection> cmd_perturb(const std::filesystem::path& manifest,
                                             const std::filesystem::path& embeddings,
                                             const std::filesystem::path& out_dir,
                                             const std::optional<std::filesystem::path>& probe_config,
                                             std::ostream& log);

}  // namespace probe_bench

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "probe_bench/engine.hpp"
#include "probe_bench/perturbation.hpp"

namespace probe_bench {

inline constexpr const char* kToolVersion = "0.1.0";

/// Grid with one row per encoder, an Acc/AUC/F1/p block per probe,
/// three decimals, "--" for absent p-values.
std::string render_study_table(const StudyReport& report);

/// Per-encoder margin summary plus per-specimen rows.
std::string render_margin_table(const std::vector<PerturbationSection>& sections);

/// One row per encoder x probe cell, full precision.
std::string study_csv(const StudyReport& report);
std::string margin_csv(const std::vector<PerturbationSection>& sections);

nlohmann::json to_json(const StudyReport& report);
nlohmann::json to_json(const MarginReport& report);

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace probe_bench

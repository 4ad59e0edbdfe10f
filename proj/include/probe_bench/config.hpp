#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "probe_bench/engine.hpp"

namespace probe_bench {

/// Flat `key = value` document. '#' starts a comment; blank lines are
/// ignored; repeated keys are kept in order.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");

/// One embedding source of a study:
///   [name=]path/to/embeddings.csv
///   [name=]gaussian:<n>:<d>[:<seed>]
///   [name=]classical:<image-dir>
struct SourceSpec {
  enum class Kind { kFile, kGaussian, kClassical };
  Kind kind = Kind::kFile;
  std::string name;
  std::filesystem::path path;  // file or image directory
  Index n = 0;
  Index d = 0;
  std::optional<std::uint64_t> seed;
};

SourceSpec parse_source(const std::string& text, const std::filesystem::path& base_dir);

/// Per-family settings applied to every probe of that family, e.g.
/// `logistic.lambda = 0.01` or `random_forest.n_trees = 500`.
void apply_probe_setting(ProbeSpec& probe, const std::string& key, const std::string& value);

struct StudyConfig {
  std::filesystem::path manifest;
  std::vector<SourceSpec> sources;
  std::vector<ProbeSpec> probes;
  int n_perm = 1000;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: PROBE_BENCH_WORKERS or hardware concurrency
  std::filesystem::path out_dir = ".";
  std::vector<std::string> formats{"text", "csv", "json"};

  std::filesystem::path perturb_manifest;  // optional perturbation section
  std::vector<SourceSpec> perturb_sources;

  /// Tree seeds left unset in the file follow the master seed.
  std::vector<bool> probe_seed_explicit;

  /// Deterministic text of everything that affects results (not workers or
  /// the output directory).
  std::string canonical_text() const;
  void validate() const;
};

/// Reads a config file; relative paths resolve against its directory.
StudyConfig load_study_config(const std::filesystem::path& path);
StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir);

/// Probe settings for the perturbation probe (`logistic.*` keys).
LogisticConfig load_probe_config(const std::filesystem::path& path);

/// Seeds tree probes that have no explicit seed with the master seed.
void resolve_probe_seeds(StudyConfig& cfg);

}  // namespace probe_bench

#include "probe_bench/commands.hpp"

#include <ostream>

#include "probe_bench/errors.hpp"
#include "probe_bench/image.hpp"
#include "probe_bench/parallel.hpp"
#include "probe_bench/report.hpp"

namespace probe_bench {

std::filesystem::path resolve_image(const std::filesystem::path& image_dir, const SpecimenRecord& record) {
  if (record.image_path) return image_dir / *record.image_path;
  for (const char* ext : {".png", ".ppm"}) {
    auto candidate = image_dir / (record.id + ext);
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw DataError("no image found for " + record.id + " in " + image_dir.string());
}

ClassicalSet extract_classical_set(const DatasetManifest& manifest, const std::filesystem::path& image_dir,
                                   const ClassicalConfig& cfg) {
  if (!std::filesystem::is_directory(image_dir)) throw DataError("not a directory: " + image_dir.string());
  if (std::filesystem::is_empty(image_dir)) throw DataError("image directory is empty: " + image_dir.string());

  const auto n = static_cast<Index>(manifest.size());
  std::vector<ImageDescriptor> descriptors;
  ClassicalSet out;
  for (const auto& record : manifest.records()) {
    const auto path = resolve_image(image_dir, record);
    RgbImage image;
    try {
      image = load_image(path);
    } catch (const DataError& e) {
      throw DataError("unreadable image " + path.string() + " (" + record.id + "): " + e.what());
    }
    if (image.empty()) throw DataError("empty image " + path.string());
    descriptors.push_back(describe_image(image, cfg));
    out.images.push_back(path);
  }

  out.histograms.s.resize(n, cfg.hist_bins);
  out.histograms.v.resize(n, cfg.hist_bins);
  Labels labels;
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    const auto& rec = manifest.records()[static_cast<std::size_t>(i)];
    out.histograms.ids.push_back(rec.id);
    out.histograms.s.row(i) = descriptors[static_cast<std::size_t>(i)].s_hist.mass.transpose();
    out.histograms.v.row(i) = descriptors[static_cast<std::size_t>(i)].v_hist.mass.transpose();
    labels.push_back(to_int(rec.label));
    rows.push_back(i);
  }
  const ClassReferences refs = class_reference_histograms(out.histograms.s, out.histograms.v, labels, rows);
  out.features.encoder_name = "classical-14";
  out.features.ids = out.histograms.ids;
  out.features.values.resize(n, kClassicalDim);
  for (Index i = 0; i < n; ++i) {
    out.features.values.row(i) = assemble_classical(descriptors[static_cast<std::size_t>(i)], refs).transpose();
  }
  return out;
}

namespace {

void write_outputs(const StudyConfig& cfg, const StudyReport& report) {
  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& f : cfg.formats) {
    if (f == "text") {
      std::string text = render_study_table(report);
      if (!report.perturbation.empty()) text += "\n" + render_margin_table(report.perturbation);
      write_text_file(cfg.out_dir / "study.txt", text);
    } else if (f == "csv") {
      write_text_file(cfg.out_dir / "study.csv", study_csv(report));
      if (!report.perturbation.empty()) {
        write_text_file(cfg.out_dir / "perturbation.csv", margin_csv(report.perturbation));
      }
    } else if (f == "json") {
      write_text_file(cfg.out_dir / "study.json", to_json(report).dump(2) + "\n");
    }
  }
}

LogisticConfig perturbation_probe_config(const StudyConfig& cfg) {
  for (const auto& p : cfg.probes) {
    if (const auto* c = std::get_if<LogisticConfig>(&p.config)) return *c;
  }
  return {};
}

PerturbationSection perturbation_section(const DatasetManifest& manifest, const EmbeddingSet& emb,
                                         const std::string& name, const LogisticConfig& probe_cfg) {
  const PairedStudyInput input = build_paired_input(manifest, emb);
  const LogisticModel probe = train_frozen_probe_for_perturbation(input.originals, probe_cfg);
  PerturbationSection section{name, margin_drop_report(probe, input.pairs)};
  section.report.encoder_name = name;
  return section;
}

}  // namespace

StudyReport cmd_run(const StudyConfig& config, std::ostream& log) {
  config.validate();
  StudyConfig cfg = config;
  resolve_probe_seeds(cfg);
  if (cfg.workers == 0) cfg.workers = default_workers();

  const DatasetManifest manifest = load_manifest(cfg.manifest);
  std::vector<InputDigest> digests{{cfg.manifest.generic_string(), file_digest(cfg.manifest)}};

  std::vector<StudySource> sources;
  for (const auto& spec : cfg.sources) {
    StudySource source;
    source.name = spec.name;
    switch (spec.kind) {
      case SourceSpec::Kind::kFile: {
        source.embeddings = load_embeddings(spec.path);
        digests.push_back({spec.path.generic_string(), file_digest(spec.path)});
        const auto sidecar = histogram_sidecar_path(spec.path);
        if (std::filesystem::exists(sidecar)) {
          source.histograms = load_histogram_table(sidecar);
          digests.push_back({sidecar.generic_string(), file_digest(sidecar)});
        }
        break;
      }
      case SourceSpec::Kind::kGaussian: {
        if (spec.n != static_cast<Index>(manifest.size())) {
          throw ConfigError("source " + spec.name + ": gaussian n=" + std::to_string(spec.n) +
                            " differs from manifest size " + std::to_string(manifest.size()));
        }
        source.embeddings = generate_gaussian_control(spec.n, spec.d, spec.seed.value_or(cfg.seed));
        for (std::size_t i = 0; i < manifest.size(); ++i) source.embeddings.ids[i] = manifest.records()[i].id;
        source.control = true;
        break;
      }
      case SourceSpec::Kind::kClassical: {
        ClassicalSet set = extract_classical_set(manifest, spec.path);
        for (const auto& img : set.images) digests.push_back({img.generic_string(), file_digest(img)});
        source.embeddings = std::move(set.features);
        source.histograms = std::move(set.histograms);
        break;
      }
    }
    log << "source " << source.name << ": " << source.embeddings.ids.size() << " x " << source.embeddings.dim()
        << '\n';
    sources.push_back(std::move(source));
  }

  StudyReport report = run_study(manifest, sources, cfg.probes, cfg.n_perm, cfg.seed, cfg.workers);

  if (!cfg.perturb_manifest.empty()) {
    const DatasetManifest paired = load_manifest(cfg.perturb_manifest);
    digests.push_back({cfg.perturb_manifest.generic_string(), file_digest(cfg.perturb_manifest)});
    const LogisticConfig probe_cfg = perturbation_probe_config(cfg);
    for (const auto& spec : cfg.perturb_sources) {
      if (spec.kind != SourceSpec::Kind::kFile) {
        throw ConfigError("perturb.source must be an embedding file: " + spec.name);
      }
      const EmbeddingSet emb = load_embeddings(spec.path);
      digests.push_back({spec.path.generic_string(), file_digest(spec.path)});
      report.perturbation.push_back(perturbation_section(paired, emb, spec.name, probe_cfg));
    }
  }

  report.provenance.version = kToolVersion;
  report.provenance.config_hash = fnv1a64_hex(cfg.canonical_text());
  report.provenance.inputs = std::move(digests);
  write_outputs(cfg, report);
  log << render_study_table(report);
  if (!report.perturbation.empty()) log << '\n' << render_margin_table(report.perturbation);
  return report;
}

void cmd_extract_classical(const std::filesystem::path& image_dir, const std::filesystem::path& manifest_path,
                           const std::filesystem::path& out_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const ClassicalSet set = extract_classical_set(manifest, image_dir);
  write_embeddings(set.features, out_path);
  write_histogram_table(set.histograms, histogram_sidecar_path(out_path));
}

void cmd_gaussian(Index n, Index d, std::uint64_t seed, const std::filesystem::path& out_path) {
  write_embeddings(generate_gaussian_control(n, d, seed), out_path);
}

std::vector<PerturbationSection> cmd_perturb(const std::filesystem::path& manifest_path,
                                             const std::filesystem::path& embeddings,
                                             const std::filesystem::path& out_dir,
                                             const std::optional<std::filesystem::path>& probe_config,
                                             std::ostream& log) {
  const LogisticConfig probe_cfg = probe_config ? load_probe_config(*probe_config) : LogisticConfig{};
  const DatasetManifest manifest = load_manifest(manifest_path);
  const EmbeddingSet emb = load_embeddings(embeddings);
  std::vector<PerturbationSection> sections{perturbation_section(manifest, emb, emb.encoder_name, probe_cfg)};
  if (sections.front().report.skipped_unpaired > 0) {
    log << "warning: skipped " << sections.front().report.skipped_unpaired << " eye-clean specimen(s) without a pair\n";
  }
  std::filesystem::create_directories(out_dir);
  const std::string text = render_margin_table(sections);
  write_text_file(out_dir / "perturbation.txt", text);
  write_text_file(out_dir / "perturbation.csv", margin_csv(sections));
  nlohmann::json doc = {{"tool", "probe-bench"},
                        {"version", kToolVersion},
                        {"inputs",
                         {{{"path", manifest_path.generic_string()}, {"fnv1a64", file_digest(manifest_path)}},
                          {{"path", embeddings.generic_string()}, {"fnv1a64", file_digest(embeddings)}}}},
                        {"perturbation", nlohmann::json::array({to_json(sections.front().report)})}};
  write_text_file(out_dir / "perturbation.json", doc.dump(2) + "\n");
  log << text;
  return sections;
}

}  // namespace probe_bench

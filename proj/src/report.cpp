#include "probe_bench/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "probe_bench/errors.hpp"

namespace probe_bench {

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_study_table(const StudyReport& report) {
  constexpr std::size_t kCol = 7;
  std::size_t name_width = 7;
  for (const auto& e : report.encoders) name_width = std::max(name_width, e.size());
  const std::size_t block_width = 4 * kCol;

  std::ostringstream out;
  out << "LOOCV macro metrics with permutation p-values (n_perm=" << report.provenance.n_perm
      << ", seed=" << report.provenance.seed << ")\n";
  out << pad("", name_width);
  for (const auto& p : report.probes) out << " | " << pad(p, block_width);
  out << '\n' << pad("Encoder", name_width);
  for (std::size_t j = 0; j < report.probes.size(); ++j) {
    out << " | ";
    for (const char* h : {"Acc", "AUC", "F1", "p"}) out << lpad(h, kCol);
  }
  out << '\n' << std::string(name_width + report.probes.size() * (block_width + 3), '-') << '\n';
  for (std::size_t e = 0; e < report.encoders.size(); ++e) {
    out << pad(report.encoders[e], name_width);
    for (std::size_t p = 0; p < report.probes.size(); ++p) {
      const auto& c = report.cell(e, p);
      out << " | " << lpad(fixed3(c.metrics.accuracy), kCol) << lpad(fixed3(c.metrics.macro_auc), kCol)
          << lpad(fixed3(c.metrics.macro_f1), kCol)
          << lpad(c.permutation ? fixed3(c.permutation->p_value) : "--", kCol);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_margin_table(const std::vector<PerturbationSection>& sections) {
  std::ostringstream out;
  out << "Perturbation sensitivity (eye-clean margin under the frozen logistic probe)\n";
  std::size_t name_width = 7;
  for (const auto& s : sections) name_width = std::max(name_width, s.encoder.size());
  out << pad("Encoder", name_width) << lpad("Pairs", 7) << lpad("Avg. margin drop", 18)
      << lpad("Std. margin drop", 18) << lpad("Reclass rate", 14) << '\n';
  for (const auto& s : sections) {
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.1f%%", 100.0 * s.report.reclass_rate);
    char mean[32];
    char sd[32];
    std::snprintf(mean, sizeof(mean), "%.2f", s.report.mean_delta);
    std::snprintf(sd, sizeof(sd), "%.2f", s.report.std_delta);
    out << pad(s.encoder, name_width) << lpad(std::to_string(s.report.per_specimen.size()), 7) << lpad(mean, 18)
        << lpad(sd, 18) << lpad(rate, 14) << '\n';
  }
  for (const auto& s : sections) {
    out << '\n' << s.encoder << " per specimen";
    if (s.report.skipped_unpaired > 0) out << " (" << s.report.skipped_unpaired << " unpaired skipped)";
    out << '\n';
    out << pad("id", 16) << lpad("m_clean", 10) << lpad("m_pert", 10) << lpad("delta_m", 10) << lpad("reclass", 9)
        << '\n';
    for (const auto& r : s.report.per_specimen) {
      out << pad(r.id, 16) << lpad(fixed3(r.m_clean), 10) << lpad(fixed3(r.m_perturbed), 10)
          << lpad(fixed3(r.delta_m), 10) << lpad(r.reclassified ? "yes" : "no", 9) << '\n';
    }
  }
  return out.str();
}

std::string study_csv(const StudyReport& report) {
  std::ostringstream out;
  out << "encoder,probe,accuracy,balanced_accuracy,macro_f1,macro_auc,p_value,p_value_conservative,n_perm\n";
  for (const auto& c : report.cells) {
    out << c.encoder << ',' << c.probe << ',' << format_double(c.metrics.accuracy) << ','
        << format_double(c.metrics.balanced_accuracy) << ',' << format_double(c.metrics.macro_f1) << ','
        << format_double(c.metrics.macro_auc) << ',';
    if (c.permutation) {
      out << format_double(c.permutation->p_value) << ',' << format_double(c.permutation->p_value_conservative)
          << ',' << c.permutation->n_perm;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string margin_csv(const std::vector<PerturbationSection>& sections) {
  std::ostringstream out;
  out << "encoder,id,m_clean,m_perturbed,delta_m,reclassified\n";
  for (const auto& s : sections) {
    for (const auto& r : s.report.per_specimen) {
      out << s.encoder << ',' << r.id << ',' << format_double(r.m_clean) << ',' << format_double(r.m_perturbed)
          << ',' << format_double(r.delta_m) << ',' << (r.reclassified ? 1 : 0) << '\n';
    }
  }
  for (const auto& s : sections) {
    out << s.encoder << ",__mean__,,," << format_double(s.report.mean_delta) << ",\n";
    out << s.encoder << ",__std__,,," << format_double(s.report.std_delta) << ",\n";
    out << s.encoder << ",__reclass_rate__,,,," << format_double(s.report.reclass_rate) << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const MarginReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.per_specimen) {
    rows.push_back({{"id", r.id},
                    {"m_clean", r.m_clean},
                    {"m_perturbed", r.m_perturbed},
                    {"delta_m", r.delta_m},
                    {"reclassified", r.reclassified}});
  }
  return {{"encoder", report.encoder_name},
          {"n_pairs", report.per_specimen.size()},
          {"skipped_unpaired", report.skipped_unpaired},
          {"mean_delta", report.mean_delta},
          {"std_delta", report.std_delta},
          {"reclass_rate", report.reclass_rate},
          {"per_specimen", rows}};
}

nlohmann::json to_json(const StudyReport& report) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : report.provenance.inputs) inputs.push_back({{"path", in.path}, {"fnv1a64", in.fnv1a64}});
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cell = {{"encoder", c.encoder},
                           {"probe", c.probe},
                           {"accuracy", c.metrics.accuracy},
                           {"balanced_accuracy", c.metrics.balanced_accuracy},
                           {"macro_f1", c.metrics.macro_f1},
                           {"macro_auc", c.metrics.macro_auc},
                           {"p_value", nullptr},
                           {"p_value_conservative", nullptr},
                           {"n_perm", nullptr}};
    if (c.permutation) {
      cell["p_value"] = c.permutation->p_value;
      cell["p_value_conservative"] = c.permutation->p_value_conservative;
      cell["n_perm"] = c.permutation->n_perm;
    }
    cells.push_back(std::move(cell));
  }
  nlohmann::json perturbation = nlohmann::json::array();
  for (const auto& s : report.perturbation) perturbation.push_back(to_json(s.report));
  return {{"provenance",
           {{"tool", report.provenance.tool},
            {"version", report.provenance.version},
            {"seed", report.provenance.seed},
            {"n_perm", report.provenance.n_perm},
            {"config_hash", report.provenance.config_hash},
            {"inputs", inputs}}},
          {"encoders", report.encoders},
          {"probes", report.probes},
          {"cells", cells},
          {"perturbation", perturbation}};
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64_hex(buf.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace probe_bench

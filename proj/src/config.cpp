#include "probe_bench/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "probe_bench/dataset.hpp"
#include "probe_bench/errors.hpp"

namespace probe_bench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

SourceSpec parse_source(const std::string& text, const std::filesystem::path& base_dir) {
  SourceSpec spec;
  std::string body = text;
  // "name=spec": a name never contains ':' or '/'.
  const auto eq = body.find('=');
  if (eq != std::string::npos && body.substr(0, eq).find_first_of(":/") == std::string::npos) {
    spec.name = trim(body.substr(0, eq));
    body = trim(body.substr(eq + 1));
  }
  if (body.empty()) throw ConfigError("empty source");
  if (body.starts_with("gaussian:")) {
    spec.kind = SourceSpec::Kind::kGaussian;
    const auto parts = split_csv_line([&] {
      std::string s = body.substr(9);
      std::replace(s.begin(), s.end(), ':', ',');
      return s;
    }());
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("source " + body + ": expected gaussian:<n>:<d>[:<seed>]");
    spec.n = parse_number<Index>("gaussian n", parts[0]);
    spec.d = parse_number<Index>("gaussian d", parts[1]);
    if (spec.n < 1) throw ConfigError("source " + body + ": gaussian n must be >= 1");
    if (spec.d < 1) throw ConfigError("source " + body + ": gaussian d must be >= 1");
    if (parts.size() == 3) spec.seed = parse_number<std::uint64_t>("gaussian seed", parts[2]);
    if (spec.name.empty()) spec.name = kGaussianControlName;
  } else if (body.starts_with("classical:")) {
    spec.kind = SourceSpec::Kind::kClassical;
    spec.path = resolve(base_dir, body.substr(10));
    if (spec.name.empty()) spec.name = "classical-14";
  } else {
    spec.kind = SourceSpec::Kind::kFile;
    spec.path = resolve(base_dir, body);
    if (spec.name.empty()) spec.name = spec.path.stem().string();
  }
  return spec;
}

void apply_probe_setting(ProbeSpec& probe, const std::string& key, const std::string& value) {
  const std::string full = std::string(family_name(probe.family)) + "." + key;
  auto bad_key = [&]() { return ConfigError("unknown probe setting " + full); };
  std::visit(
      [&](auto& cfg) {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, LogisticConfig> || std::is_same_v<T, LinearSvmConfig>) {
          if (key == "max_iterations") {
            cfg.solver.max_iterations = parse_number<int>(full, value);
            if (cfg.solver.max_iterations < 1) throw ConfigError(full + " must be >= 1");
          } else if (key == "tolerance") {
            cfg.solver.tolerance = parse_number<double>(full, value);
            if (!(cfg.solver.tolerance > 0.0)) throw ConfigError(full + " must be > 0");
          } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(full, value);
          } else if constexpr (std::is_same_v<T, LogisticConfig>) {
            if (key != "lambda") throw bad_key();
            cfg.lambda = parse_number<double>(full, value);
            if (!(*cfg.lambda >= 0.0)) throw ConfigError(full + " must be >= 0");
          } else {
            if (key != "c") throw bad_key();
            cfg.c = parse_number<double>(full, value);
            if (!(cfg.c > 0.0)) throw ConfigError(full + " must be > 0");
          }
        } else if constexpr (std::is_same_v<T, ForestConfig>) {
          if (key == "n_trees") {
            cfg.n_trees = parse_number<int>(full, value);
            if (cfg.n_trees < 1) throw ConfigError(full + " must be >= 1");
          } else if (key == "max_depth") {
            cfg.max_depth = parse_number<int>(full, value);
            if (cfg.max_depth < 0) throw ConfigError(full + " must be >= 0");
          } else if (key == "features_per_split") {
            cfg.features_per_split = parse_number<int>(full, value);
            if (*cfg.features_per_split < 1) throw ConfigError(full + " must be >= 1");
          } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(full, value);
          } else {
            throw bad_key();
          }
        } else {
          if (key == "n_rounds") {
            cfg.n_rounds = parse_number<int>(full, value);
            if (cfg.n_rounds < 1) throw ConfigError(full + " must be >= 1");
          } else if (key == "learning_rate") {
            cfg.learning_rate = parse_number<double>(full, value);
            if (!(cfg.learning_rate >= 0.0)) throw ConfigError(full + " must be >= 0");
          } else if (key == "max_depth") {
            cfg.max_depth = parse_number<int>(full, value);
            if (cfg.max_depth < 0) throw ConfigError(full + " must be >= 0");
          } else if (key == "lambda_leaf") {
            cfg.lambda_leaf = parse_number<double>(full, value);
            if (!(cfg.lambda_leaf >= 0.0)) throw ConfigError(full + " must be >= 0");
          } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(full, value);
          } else {
            throw bad_key();
          }
        }
      },
      probe.config);
}

StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir) {
  StudyConfig cfg;
  std::vector<std::pair<std::string, std::string>> probe_settings;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "manifest") {
      cfg.manifest = resolve(base_dir, value);
    } else if (key == "source") {
      cfg.sources.push_back(parse_source(value, base_dir));
    } else if (key == "probe") {
      const auto colon = value.find(':');
      const std::string fam = trim(value.substr(0, colon));
      const auto family = parse_family(fam);
      if (!family) throw ConfigError("unknown probe family '" + fam + "'");
      auto spec = ProbeSpec::defaults(*family);
      if (colon != std::string::npos) spec.name = trim(value.substr(colon + 1));
      cfg.probes.push_back(std::move(spec));
    } else if (key == "n_perm") {
      cfg.n_perm = parse_number<int>("n_perm", value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>("seed", value);
    } else if (key == "workers") {
      cfg.workers = parse_number<int>("workers", value);
    } else if (key == "out") {
      cfg.out_dir = resolve(base_dir, value);
    } else if (key == "formats") {
      cfg.formats.clear();
      for (const auto& f : split_csv_line(value)) cfg.formats.push_back(trim(f));
    } else if (key == "perturb.manifest") {
      cfg.perturb_manifest = resolve(base_dir, value);
    } else if (key == "perturb.source") {
      cfg.perturb_sources.push_back(parse_source(value, base_dir));
    } else if (const auto dot = key.find('.'); dot != std::string::npos && parse_family(key.substr(0, dot))) {
      probe_settings.emplace_back(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.probe_seed_explicit.assign(cfg.probes.size(), false);
  for (const auto& [key, value] : probe_settings) {
    const auto dot = key.find('.');
    const auto family = *parse_family(key.substr(0, dot));
    const std::string setting = key.substr(dot + 1);
    for (std::size_t i = 0; i < cfg.probes.size(); ++i) {
      if (cfg.probes[i].family != family) continue;
      apply_probe_setting(cfg.probes[i], setting, value);
      if (setting == "seed") cfg.probe_seed_explicit[i] = true;
    }
  }
  return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  return parse_study_config(read_file(path), path.parent_path());
}

LogisticConfig load_probe_config(const std::filesystem::path& path) {
  auto probe = ProbeSpec::defaults(ProbeFamily::kLogistic);
  for (const auto& [key, value] : parse_key_values(read_file(path), path.string())) {
    if (!key.starts_with("logistic.")) throw ConfigError("probe config accepts logistic.* keys only, got " + key);
    apply_probe_setting(probe, key.substr(9), value);
  }
  return std::get<LogisticConfig>(probe.config);
}

void resolve_probe_seeds(StudyConfig& cfg) {
  cfg.probe_seed_explicit.resize(cfg.probes.size(), false);
  for (std::size_t i = 0; i < cfg.probes.size(); ++i) {
    if (cfg.probe_seed_explicit[i]) continue;
    std::visit([&](auto& c) { c.seed = cfg.seed; }, cfg.probes[i].config);
  }
}

void StudyConfig::validate() const {
  if (n_perm < 1) throw ConfigError("n_perm must be >= 1 (got " + std::to_string(n_perm) + ")");
  if (workers < 0) throw ConfigError("workers must be >= 1");
  if (manifest.empty()) throw ConfigError("manifest is required");
  if (sources.empty()) throw ConfigError("at least one source is required");
  if (probes.empty()) throw ConfigError("at least one probe is required");
  for (const auto& f : formats) {
    if (f != "text" && f != "csv" && f != "json") throw ConfigError("unknown output format '" + f + "'");
  }
  if (!perturb_sources.empty() && perturb_manifest.empty()) {
    throw ConfigError("perturb.source given without perturb.manifest");
  }
}

namespace {

std::string source_text(const SourceSpec& s) {
  std::ostringstream out;
  out << s.name << '|';
  switch (s.kind) {
    case SourceSpec::Kind::kFile: out << "file|" << s.path.generic_string(); break;
    case SourceSpec::Kind::kClassical: out << "classical|" << s.path.generic_string(); break;
    case SourceSpec::Kind::kGaussian:
      out << "gaussian|" << s.n << '|' << s.d << '|' << (s.seed ? std::to_string(*s.seed) : "master");
      break;
  }
  return out.str();
}

}  // namespace

std::string StudyConfig::canonical_text() const {
  std::ostringstream out;
  out << "manifest=" << manifest.generic_string() << '\n';
  for (const auto& s : sources) out << "source=" << source_text(s) << '\n';
  for (const auto& p : probes) {
    out << "probe=" << p.name << '|' << family_name(p.family) << '|';
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, LogisticConfig>) {
            out << "lambda=" << (c.lambda ? format_double(*c.lambda) : "1/N") << ",max_it=" << c.solver.max_iterations
                << ",tol=" << format_double(c.solver.tolerance);
          } else if constexpr (std::is_same_v<T, LinearSvmConfig>) {
            out << "c=" << format_double(c.c) << ",max_it=" << c.solver.max_iterations
                << ",tol=" << format_double(c.solver.tolerance);
          } else if constexpr (std::is_same_v<T, ForestConfig>) {
            out << "n_trees=" << c.n_trees << ",max_depth=" << c.max_depth
                << ",fps=" << (c.features_per_split ? std::to_string(*c.features_per_split) : "sqrt")
                << ",seed=" << c.seed;
          } else {
            out << "n_rounds=" << c.n_rounds << ",lr=" << format_double(c.learning_rate)
                << ",max_depth=" << c.max_depth << ",lambda_leaf=" << format_double(c.lambda_leaf)
                << ",seed=" << c.seed;
          }
        },
        p.config);
    out << '\n';
  }
  out << "n_perm=" << n_perm << "\nseed=" << seed << '\n';
  if (!perturb_manifest.empty()) out << "perturb.manifest=" << perturb_manifest.generic_string() << '\n';
  for (const auto& s : perturb_sources) out << "perturb.source=" << source_text(s) << '\n';
  return out.str();
}

}  // namespace probe_bench

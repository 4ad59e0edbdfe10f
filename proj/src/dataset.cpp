#include "probe_bench/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "probe_bench/errors.hpp"
#include "probe_bench/rng.hpp"

namespace probe_bench {

std::optional<ClassId> parse_class(std::string_view token) {
  if (token == "eye-clean") return ClassId::kEyeClean;
  if (token == "moderate") return ClassId::kModerate;
  if (token == "heavy") return ClassId::kHeavy;
  return std::nullopt;
}

std::string_view class_token(ClassId c) {
  switch (c) {
    case ClassId::kEyeClean: return "eye-clean";
    case ClassId::kModerate: return "moderate";
    case ClassId::kHeavy: return "heavy";
  }
  return "?";
}

std::vector<int> class_counts(const Labels& y, int k) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int label : y) {
    if (label < 0 || label >= k) throw DataError("label out of range: " + std::to_string(label));
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
  while (true) {
    const auto pos = rest.find(',');
    out.emplace_back(rest.substr(0, pos));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

DatasetManifest::DatasetManifest(std::vector<SpecimenRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.id.empty()) throw DataError("manifest row " + std::to_string(i + 1) + ": empty id");
    if (!index_.emplace(r.id, i).second) throw DataError("duplicate id in manifest: " + r.id);
    ++counts_[static_cast<std::size_t>(to_int(r.label))];
  }
  for (const auto& r : records_) {
    if (!r.pair_id) continue;
    if (!index_.contains(*r.pair_id)) {
      throw DataError("pair_id of " + r.id + " does not resolve: " + *r.pair_id);
    }
    if (r.label != ClassId::kEyeClean) {
      throw DataError("paired specimen " + r.id + " is not labeled eye-clean");
    }
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (counts_[static_cast<std::size_t>(k)] < 2) {
      throw DataError("class with < 2 members: " +
                      std::string(class_token(static_cast<ClassId>(k))) + " has " +
                      std::to_string(counts_[static_cast<std::size_t>(k)]));
    }
  }
}

std::optional<std::size_t> DatasetManifest::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DatasetManifest::perturbed_ids() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (r.pair_id) out.push_back(*r.pair_id);
  }
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"id", "label", "image_path", "pair_id"};
  if (header != expected) {
    throw DataError(path.string() + ": header must be id,label,image_path,pair_id");
  }
  std::vector<SpecimenRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(cells.size()));
    }
    SpecimenRecord r;
    r.id = cells[0];
    const auto label = parse_class(cells[1]);
    if (!label) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown label '" +
                      cells[1] + "'");
    }
    r.label = *label;
    if (!cells[2].empty()) r.image_path = cells[2];
    if (!cells[3].empty()) r.pair_id = cells[3];
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(path.string() + ": manifest has no rows");
  return DatasetManifest(std::move(records));
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id,label,image_path,pair_id\n";
  for (const auto& r : manifest.records()) {
    out << r.id << ',' << class_token(r.label) << ',' << r.image_path.value_or("") << ','
        << r.pair_id.value_or("") << '\n';
  }
}

std::optional<Index> EmbeddingSet::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<Index>(i);
  }
  return std::nullopt;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty embedding file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "id") {
    throw DataError(path.string() + ": header must be id,f0,f1,...");
  }
  const auto dim = static_cast<Index>(header.size() - 1);

  EmbeddingSet emb;
  emb.encoder_name = path.stem().string();
  std::vector<double> flat;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (static_cast<Index>(cells.size()) != dim + 1) {
      throw DataError(where + ": ragged row '" + cells[0] + "' has " +
                      std::to_string(cells.size() - 1) + " values, expected " + std::to_string(dim));
    }
    if (cells[0].empty()) throw DataError(where + ": empty id");
    if (!seen.insert(cells[0]).second) throw DataError(where + ": duplicate id " + cells[0]);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const auto& c = cells[j];
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw DataError(where + ": non-numeric value '" + c + "' in row " + cells[0]);
      }
      if (!std::isfinite(v)) throw DataError(where + ": non-finite value in row " + cells[0]);
      flat.push_back(v);
    }
    emb.ids.push_back(cells[0]);
  }
  if (emb.ids.empty()) throw DataError(path.string() + ": no embedding rows");
  emb.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Index>(emb.ids.size()), dim);
  return emb;
}

void write_embeddings(const EmbeddingSet& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id";
  for (Index j = 0; j < emb.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < emb.ids.size(); ++i) {
    out << emb.ids[i];
    for (Index j = 0; j < emb.dim(); ++j) out << ',' << format_double(emb.values(static_cast<Index>(i), j));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingSet generate_gaussian_control(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ConfigError("gaussian control needs n >= 1 and d >= 1");
  EmbeddingSet emb;
  emb.encoder_name = kGaussianControlName;
  emb.values.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    emb.ids.push_back("g" + std::to_string(i));
    for (Index j = 0; j < d; ++j) {
      emb.values(i, j) = standard_normal_at(seed, static_cast<std::uint64_t>(i * d + j));
    }
  }
  return emb;
}

AlignedDataset align(const DatasetManifest& manifest, const EmbeddingSet& emb) {
  std::map<std::string, Index> rows;
  for (std::size_t i = 0; i < emb.ids.size(); ++i) rows.emplace(emb.ids[i], static_cast<Index>(i));

  std::vector<std::string> missing;
  for (const auto& r : manifest.records()) {
    if (!rows.contains(r.id)) missing.push_back(r.id);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "embeddings '" << emb.encoder_name << "' missing " << missing.size() << " manifest id(s):";
    for (const auto& id : missing) msg << ' ' << id;
    throw DataError(msg.str());
  }

  AlignedDataset out;
  const auto n = static_cast<Index>(manifest.size());
  out.X.resize(n, emb.dim());
  for (Index i = 0; i < n; ++i) {
    const auto& r = manifest.records()[static_cast<std::size_t>(i)];
    out.X.row(i) = emb.values.row(rows.at(r.id));
    out.y.push_back(to_int(r.label));
    out.ids.push_back(r.id);
  }
  out.extra_ids = emb.ids.size() - manifest.size();
  return out;
}

}  // namespace probe_bench

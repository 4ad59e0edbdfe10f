#include "probe_bench/classical.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "probe_bench/dataset.hpp"
#include "probe_bench/errors.hpp"

namespace probe_bench {

HsvImage rgb_to_hsv(const RgbImage& image) {
  if (image.empty()) throw DataError("rgb_to_hsv: empty image");
  HsvImage out;
  out.h.resize(image.height, image.width);
  out.s.resize(image.height, image.width);
  out.v.resize(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double r = image.r(x, y) / 255.0;
      const double g = image.g(x, y) / 255.0;
      const double b = image.b(x, y) / 255.0;
      const double mx = std::max({r, g, b});
      const double mn = std::min({r, g, b});
      const double delta = mx - mn;
      double hue = 0.0;
      if (delta > 0.0) {
        if (mx == r) {
          hue = 60.0 * std::fmod((g - b) / delta, 6.0);
        } else if (mx == g) {
          hue = 60.0 * ((b - r) / delta + 2.0);
        } else {
          hue = 60.0 * ((r - g) / delta + 4.0);
        }
        if (hue < 0.0) hue += 360.0;
        if (hue >= 360.0) hue -= 360.0;
      }
      out.h(y, x) = hue;
      out.s(y, x) = mx > 0.0 ? delta / mx : 0.0;
      out.v(y, x) = mx;
    }
  }
  return out;
}

Eigen::Vector4d hsv_stats(const HsvImage& img) {
  const auto n = static_cast<double>(img.s.size());
  const double mean_s = img.s.mean();
  const double mean_v = img.v.mean();
  const double std_s = std::sqrt((img.s - mean_s).square().sum() / n);
  const double std_v = std::sqrt((img.v - mean_v).square().sum() / n);
  return {mean_s, std_s, mean_v, std_v};
}

namespace {

int quantize(double value, int levels) {
  return std::clamp(static_cast<int>(std::floor(value * levels)), 0, levels - 1);
}

}  // namespace

Glcm compute_glcm(const HsvImage& img, GlcmOrientation orientation, int levels, int distance) {
  if (levels < 1 || distance < 1) throw ConfigError("GLCM needs levels >= 1 and distance >= 1");
  const int dx = orientation == GlcmOrientation::kDeg0 ? distance : 0;
  const int dy = orientation == GlcmOrientation::kDeg90 ? distance : 0;
  if (img.width() <= dx || img.height() <= dy || img.v.size() == 0) {
    throw DataError("GLCM: image smaller than the pixel offset");
  }
  Glcm glcm{levels, orientation, distance, Eigen::MatrixXd::Zero(levels, levels)};
  double total = 0.0;
  for (int y = 0; y + dy < img.height(); ++y) {
    for (int x = 0; x + dx < img.width(); ++x) {
      const int a = quantize(img.v(y, x), levels);
      const int b = quantize(img.v(y + dy, x + dx), levels);
      glcm.p(a, b) += 1.0;
      glcm.p(b, a) += 1.0;
      total += 2.0;
    }
  }
  glcm.p /= total;
  return glcm;
}

GlcmFeatures glcm_features(const Glcm& glcm) {
  GlcmFeatures f;
  for (Index j = 0; j < glcm.p.cols(); ++j) {
    for (Index i = 0; i < glcm.p.rows(); ++i) {
      const double p = glcm.p(i, j);
      if (p <= 0.0) continue;
      f.homogeneity += p / (1.0 + static_cast<double>(std::abs(i - j)));
      f.entropy -= p * std::log(p);
    }
  }
  return f;
}

GlcmFeatures glcm_features(const HsvImage& img, GlcmOrientation orientation, int levels, int distance) {
  return glcm_features(compute_glcm(img, orientation, levels, distance));
}

Histogram channel_histogram(const Eigen::ArrayXXd& channel, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (channel.size() == 0) throw DataError("histogram of an empty channel");
  Histogram h{Eigen::VectorXd::Zero(bins)};
  for (Index i = 0; i < channel.size(); ++i) h.mass(quantize(channel(i), bins)) += 1.0;
  h.mass /= static_cast<double>(channel.size());
  return h;
}

double bhattacharyya_distance(const Histogram& h1, const Histogram& h2) {
  if (h1.bins() != h2.bins()) {
    throw DataError("bhattacharyya_distance: bin counts differ (" + std::to_string(h1.bins()) + " vs " +
                    std::to_string(h2.bins()) + ")");
  }
  const double bc = (h1.mass.array() * h2.mass.array()).sqrt().sum();
  return -std::log(std::max(bc, kBhattacharyyaFloor));
}

ImageDescriptor describe_image(const RgbImage& image, const ClassicalConfig& cfg) {
  const HsvImage hsv = rgb_to_hsv(image);
  const auto g0 = glcm_features(hsv, GlcmOrientation::kDeg0, cfg.glcm_levels, cfg.glcm_distance);
  const auto g90 = glcm_features(hsv, GlcmOrientation::kDeg90, cfg.glcm_levels, cfg.glcm_distance);
  ImageDescriptor d;
  d.base.head<4>() = hsv_stats(hsv);
  d.base.tail<4>() << g0.homogeneity, g0.entropy, g90.homogeneity, g90.entropy;
  d.s_hist = channel_histogram(hsv.s, cfg.hist_bins);
  d.v_hist = channel_histogram(hsv.v, cfg.hist_bins);
  return d;
}

ClassReferences class_reference_histograms(const Eigen::MatrixXd& s_hist, const Eigen::MatrixXd& v_hist,
                                           const Labels& labels, std::span<const Index> rows) {
  ClassReferences refs;
  std::array<int, kNumClasses> members{};
  for (int k = 0; k < kNumClasses; ++k) {
    refs.s[k].mass = Eigen::VectorXd::Zero(s_hist.cols());
    refs.v[k].mass = Eigen::VectorXd::Zero(v_hist.cols());
  }
  for (const Index r : rows) {
    const int k = labels[static_cast<std::size_t>(r)];
    refs.s[k].mass += s_hist.row(r).transpose();
    refs.v[k].mass += v_hist.row(r).transpose();
    ++members[k];
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (members[k] == 0) {
      throw DataError("class reference histograms: class " +
                      std::string(class_token(static_cast<ClassId>(k))) + " has no images");
    }
    refs.s[k].mass /= refs.s[k].mass.sum();
    refs.v[k].mass /= refs.v[k].mass.sum();
  }
  return refs;
}

ClassReferences class_reference_histograms(std::span<const std::pair<RgbImage, ClassId>> images,
                                           const ClassicalConfig& cfg) {
  const auto n = static_cast<Index>(images.size());
  Eigen::MatrixXd s(n, cfg.hist_bins);
  Eigen::MatrixXd v(n, cfg.hist_bins);
  Labels labels;
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    const HsvImage hsv = rgb_to_hsv(images[static_cast<std::size_t>(i)].first);
    s.row(i) = channel_histogram(hsv.s, cfg.hist_bins).mass.transpose();
    v.row(i) = channel_histogram(hsv.v, cfg.hist_bins).mass.transpose();
    labels.push_back(to_int(images[static_cast<std::size_t>(i)].second));
    rows.push_back(i);
  }
  return class_reference_histograms(s, v, labels, rows);
}

Eigen::Matrix<double, 6, 1> reference_distances(const Eigen::Ref<const Eigen::VectorXd>& s_hist,
                                                const Eigen::Ref<const Eigen::VectorXd>& v_hist,
                                                const ClassReferences& refs) {
  const Histogram s{s_hist};
  const Histogram v{v_hist};
  Eigen::Matrix<double, 6, 1> out;
  for (int k = 0; k < kNumClasses; ++k) {
    out(k) = bhattacharyya_distance(s, refs.s[k]);
    out(kNumClasses + k) = bhattacharyya_distance(v, refs.v[k]);
  }
  return out;
}

ClassicalFeatureVector assemble_classical(const ImageDescriptor& desc, const ClassReferences& refs) {
  ClassicalFeatureVector out;
  out.head<8>() = desc.base;
  out.tail<6>() = reference_distances(desc.s_hist.mass, desc.v_hist.mass, refs);
  return out;
}

ClassicalFeatureVector extract_classical(const RgbImage& image, const ClassReferences& refs,
                                         const ClassicalConfig& cfg) {
  return assemble_classical(describe_image(image, cfg), refs);
}

std::filesystem::path histogram_sidecar_path(const std::filesystem::path& embeddings) {
  auto p = embeddings;
  p += ".hist.csv";
  return p;
}

void write_histogram_table(const HistogramTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id";
  for (Index b = 0; b < table.s.cols(); ++b) out << ",s" << b;
  for (Index b = 0; b < table.v.cols(); ++b) out << ",v" << b;
  out << '\n';
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto r = static_cast<Index>(i);
    out << table.ids[i];
    for (Index b = 0; b < table.s.cols(); ++b) out << ',' << format_double(table.s(r, b));
    for (Index b = 0; b < table.v.cols(); ++b) out << ',' << format_double(table.v(r, b));
    out << '\n';
  }
}

HistogramTable load_histogram_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open histogram table " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty histogram table");
  const auto header = split_csv_line(line);
  const auto s_bins = std::count_if(header.begin(), header.end(), [](const auto& c) { return c.starts_with('s'); });
  const auto v_bins = std::count_if(header.begin(), header.end(), [](const auto& c) { return c.starts_with('v'); });
  if (header.empty() || header[0] != "id" || s_bins < 1 || s_bins != v_bins ||
      static_cast<std::size_t>(s_bins + v_bins + 1) != header.size()) {
    throw DataError(path.string() + ": header must be id,s0..,v0..");
  }
  HistogramTable table;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw DataError(path.string() + ": ragged row " + cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double v = 0.0;
      const auto res = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (res.ec != std::errc() || !std::isfinite(v) || v < 0.0) {
        throw DataError(path.string() + ": bad histogram mass in row " + cells[0]);
      }
      row.push_back(v);
    }
    table.ids.push_back(cells[0]);
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  table.s.resize(n, s_bins);
  table.v.resize(n, v_bins);
  for (Index i = 0; i < n; ++i) {
    for (Index b = 0; b < s_bins; ++b) table.s(i, b) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)];
    for (Index b = 0; b < v_bins; ++b) {
      table.v(i, b) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(s_bins + b)];
    }
  }
  return table;
}

}  // namespace probe_bench

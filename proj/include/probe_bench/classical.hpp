#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "probe_bench/image.hpp"
#include "probe_bench/types.hpp"

namespace probe_bench {

/// Per-pixel hexcone HSV. H in degrees [0, 360); S and V in [0, 1].
/// Arrays are height x width.
struct HsvImage {
  Eigen::ArrayXXd h;
  Eigen::ArrayXXd s;
  Eigen::ArrayXXd v;

  int width() const { return static_cast<int>(v.cols()); }
  int height() const { return static_cast<int>(v.rows()); }
};

HsvImage rgb_to_hsv(const RgbImage& image);

/// (mean_S, std_S, mean_V, std_V), population standard deviations.
Eigen::Vector4d hsv_stats(const HsvImage& img);

enum class GlcmOrientation { kDeg0, kDeg90 };

/// Symmetric, normalized gray-level co-occurrence matrix of the V channel.
struct Glcm {
  int levels = 0;
  GlcmOrientation orientation = GlcmOrientation::kDeg0;
  int distance = 1;
  Eigen::MatrixXd p;  // levels x levels, sums to 1
};

/// V quantized to `levels` uniform bins; every pixel pair at the offset is
/// counted in both orders.
Glcm compute_glcm(const HsvImage& img, GlcmOrientation orientation, int levels, int distance);

struct GlcmFeatures {
  double homogeneity = 0.0;  // sum P(i,j) / (1 + |i - j|)
  double entropy = 0.0;      // -sum P ln P over nonzero cells
};

GlcmFeatures glcm_features(const Glcm& glcm);
GlcmFeatures glcm_features(const HsvImage& img, GlcmOrientation orientation, int levels, int distance);

/// Normalized histogram with uniform bins over [0, 1].
struct Histogram {
  Eigen::VectorXd mass;
  Index bins() const { return mass.size(); }
};

Histogram channel_histogram(const Eigen::ArrayXXd& channel, int bins);

inline constexpr double kBhattacharyyaFloor = 1e-12;

/// -ln(max(sum sqrt(h1 * h2), 1e-12)).
double bhattacharyya_distance(const Histogram& h1, const Histogram& h2);

struct ClassicalConfig {
  int glcm_levels = 32;
  int glcm_distance = 1;
  int hist_bins = 32;
};

/// Label-free part of one image's classical description: the 8 HSV/GLCM
/// entries plus the S and V histograms the reference distances need.
struct ImageDescriptor {
  Eigen::Matrix<double, 8, 1> base;
  Histogram s_hist;
  Histogram v_hist;
};

ImageDescriptor describe_image(const RgbImage& image, const ClassicalConfig& cfg = {});

/// Per-class mean S and V histograms.
struct ClassReferences {
  std::array<Histogram, kNumClasses> s;
  std::array<Histogram, kNumClasses> v;
};

/// Bin-wise mean of member histograms per class, renormalized. Throws when a
/// class has no images.
ClassReferences class_reference_histograms(std::span<const std::pair<RgbImage, ClassId>> images,
                                           const ClassicalConfig& cfg = {});

/// Same, from precomputed histograms (rows = images) restricted to `rows`.
ClassReferences class_reference_histograms(const Eigen::MatrixXd& s_hist, const Eigen::MatrixXd& v_hist,
                                           const Labels& labels, std::span<const Index> rows);

inline constexpr int kClassicalDim = 14;
using ClassicalFeatureVector = Eigen::Matrix<double, kClassicalDim, 1>;

/// [mean_S, std_S, mean_V, std_V, homog_0, entropy_0, homog_90, entropy_90,
///  dB(S,c0), dB(S,c1), dB(S,c2), dB(V,c0), dB(V,c1), dB(V,c2)].
ClassicalFeatureVector extract_classical(const RgbImage& image, const ClassReferences& refs,
                                         const ClassicalConfig& cfg = {});
ClassicalFeatureVector assemble_classical(const ImageDescriptor& desc, const ClassReferences& refs);

/// The six reference distances for a histogram pair.
Eigen::Matrix<double, 6, 1> reference_distances(const Eigen::Ref<const Eigen::VectorXd>& s_hist,
                                                const Eigen::Ref<const Eigen::VectorXd>& v_hist,
                                                const ClassReferences& refs);

/// Per-image S and V histograms stored next to a classical embedding file so
/// evaluation can rebuild the reference distances inside each training fold.
struct HistogramTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd s;  // rows = ids, cols = bins
  Eigen::MatrixXd v;
};

/// `<embeddings>.hist.csv`
std::filesystem::path histogram_sidecar_path(const std::filesystem::path& embeddings);
void write_histogram_table(const HistogramTable& table, const std::filesystem::path& path);
HistogramTable load_histogram_table(const std::filesystem::path& path);

}  // namespace probe_bench

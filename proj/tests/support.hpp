#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "probe_bench/dataset.hpp"
#include "probe_bench/rng.hpp"

namespace probe_bench::testing {

inline Labels counts_labels(std::initializer_list<int> counts) {
  Labels y;
  int k = 0;
  for (int c : counts) {
    for (int i = 0; i < c; ++i) y.push_back(k);
    ++k;
  }
  return y;
}

inline Labels labels_21_9_7() { return counts_labels({21, 9, 7}); }

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline AlignedDataset make_dataset(Eigen::MatrixXd X, Labels y) {
  AlignedDataset d;
  d.ids = make_ids(y.size());
  d.X = std::move(X);
  d.y = std::move(y);
  return d;
}

/// Normal matrix from std::mt19937_64, deliberately independent of the
/// library's own generator.
inline Eigen::MatrixXd normal_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

/// Isotropic unit-variance clusters whose centers sit pairwise `separation`
/// apart (scaled simplex vertices on the first K axes).
inline Eigen::MatrixXd cluster_features(const Labels& y, Index d, double separation, std::uint64_t seed) {
  Eigen::MatrixXd X = normal_matrix(static_cast<Index>(y.size()), d, seed);
  const double offset = separation / std::sqrt(2.0);
  for (std::size_t i = 0; i < y.size(); ++i) X(static_cast<Index>(i), y[i]) += offset;
  return X;
}

/// Same separation with centers along random orthonormal directions, so the
/// class signal is spread over every coordinate rather than one axis each.
inline Eigen::MatrixXd rotated_cluster_features(const Labels& y, Index d, double separation, std::uint64_t seed) {
  Eigen::MatrixXd X = normal_matrix(static_cast<Index>(y.size()), d, seed);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal_matrix(d, kNumClasses, seed ^ 0x5eedULL));
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, kNumClasses);
  const double offset = separation / std::sqrt(2.0);
  for (std::size_t i = 0; i < y.size(); ++i) X.row(static_cast<Index>(i)) += offset * Q.col(y[i]).transpose();
  return X;
}

/// (wins + ties/2) / (pos * neg) over every positive/negative pair.
inline double brute_force_auc(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  double wins = 0.0;
  double pairs = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (!positive[static_cast<std::size_t>(i)]) continue;
    for (Index j = 0; j < scores.size(); ++j) {
      if (positive[static_cast<std::size_t>(j)]) continue;
      pairs += 1.0;
      if (scores(i) > scores(j)) {
        wins += 1.0;
      } else if (scores(i) == scores(j)) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

inline double brute_force_macro_auc(const Labels& y, const Eigen::MatrixXd& scores) {
  double sum = 0.0;
  for (Index k = 0; k < scores.cols(); ++k) {
    std::vector<bool> pos;
    for (int label : y) pos.push_back(label == k);
    sum += brute_force_auc(scores.col(k), pos);
  }
  return sum / static_cast<double>(scores.cols());
}

/// Central finite-difference gradient with step h.
template <typename F>
Eigen::VectorXd numeric_gradient(const F& f, const Eigen::VectorXd& theta, double h = 1e-5) {
  Eigen::VectorXd g(theta.size());
  Eigen::VectorXd probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe(i) = theta(i) + h;
    const double up = f(probe, nullptr);
    probe(i) = theta(i) - h;
    const double down = f(probe, nullptr);
    probe(i) = theta(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("probe_bench_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Manifest CSV text for the given class counts; ids s0, s1, ...
inline std::string manifest_text(std::initializer_list<int> counts) {
  std::string text = "id,label,image_path,pair_id\n";
  const char* names[] = {"eye-clean", "moderate", "heavy"};
  int k = 0;
  int i = 0;
  for (int c : counts) {
    for (int j = 0; j < c; ++j) text += "s" + std::to_string(i++) + "," + names[k] + ",,\n";
    ++k;
  }
  return text;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace probe_bench::testing

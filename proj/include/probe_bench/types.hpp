#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace probe_bench {

using Index = Eigen::Index;

/// Number of clarity grades.
inline constexpr int kNumClasses = 3;

/// Clarity grade. Class 0 is always eye-clean, the reference class of the margin.
enum class ClassId : std::uint8_t { kEyeClean = 0, kModerate = 1, kHeavy = 2 };

constexpr int to_int(ClassId c) { return static_cast<int>(c); }

/// Maps "eye-clean" / "moderate" / "heavy" to a ClassId.
std::optional<ClassId> parse_class(std::string_view token);
std::string_view class_token(ClassId c);

/// Integer label vector, one entry per row, values in [0, K).
using Labels = std::vector<int>;

/// Counts per class in [0, k).
std::vector<int> class_counts(const Labels& y, int k);

}  // namespace probe_bench

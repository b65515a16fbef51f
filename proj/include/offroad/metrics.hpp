#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "offroad/encodings.hpp"
#include "offroad/labels.hpp"

namespace offroad::metrics {

/// counts[g][p]: pixels of ground-truth class g predicted as p.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};
  /// Ground-truth pixels carrying the ignore label (not in `counts`).
  std::uint64_t ignored = 0;

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(int g) const;
  std::uint64_t column_sum(int p) const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predictions outside 0..5 on scored pixels raise Errc::out_of_range.
ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt);

double overall_accuracy(const ConfusionMatrix& cm);

struct PrecisionRecall {
  std::array<std::optional<double>, kNumClasses> precision;
  std::array<std::optional<double>, kNumClasses> recall;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  int excluded_precision = 0;  // classes never predicted
  int excluded_recall = 0;     // classes absent from ground truth
};

/// Unweighted per-class means; zero-denominator classes are excluded.
PrecisionRecall mean_avg_precision_recall(const ConfusionMatrix& cm);

struct MetricsReport {
  std::string name;  // e.g. "RGBH (SGBM)"
  double overall_accuracy = 0.0;
  double mean_avg_precision = 0.0;
  double mean_avg_recall = 0.0;
  std::array<std::optional<double>, kNumClasses> precision;
  std::array<std::optional<double>, kNumClasses> recall;
  int excluded_precision = 0;
  int excluded_recall = 0;
};

MetricsReport make_report(const std::string& name, const ConfusionMatrix& cm);

/// Header plus one row per report.
std::string to_csv(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> from_csv(const std::string& text);

/// Aligned table with columns Overall Accuracy / Mean Average Precision /
/// Mean Average Recall; the best value of each column (ties included) is
/// marked with '*'.
std::string format_table(const std::vector<MetricsReport>& reports);

/// best[r][c] tells whether report r holds the best value in column c.
std::vector<std::array<bool, 3>> best_marks(const std::vector<MetricsReport>& reports);

}  // namespace offroad::metrics

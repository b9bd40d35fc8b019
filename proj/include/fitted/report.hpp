#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "fitted/ood_metrics.hpp"

namespace fitted::report {

// Rates as percentages rounded to two decimals, e.g. 0.49891 -> 49.89.
double percent(double rate);
std::string percent_text(double rate);

// Row labels of the confidence-statistics table.
inline constexpr const char* kMissRow = "Avg. miss-prediction conf.";
inline constexpr const char* kCorrectRow = "Avg. correct prediction conf.";
inline constexpr const char* kTotalRow = "Avg. total prediction conf.";
inline constexpr const char* kAccuracyRow = "Classification Accuracy";

// Section labels of the detection table.
inline constexpr const char* kFprSection = "FPR at 95% TPR";
inline constexpr const char* kAurocSection = "Area under ROC curve";
inline constexpr const char* kDetectionSection = "Best detection error";

struct NamedStats {
  std::string model;
  ConfidenceStats stats;
};

// Markdown table: one column per model, rows kMissRow..kAccuracyRow. Means
// carry their standard deviation in parentheses; undefined cells read "n/a".
std::string confidence_table(const std::vector<NamedStats>& models);

struct DetectionCell {
  std::string model;
  std::string ood_dataset;
  DetectionMetrics metrics;
};

// Markdown table: one column per model, three sections (kFprSection,
// kAurocSection, kDetectionSection) each with one row per OOD dataset.
std::string detection_table(const std::vector<std::string>& models,
                            const std::vector<std::string>& ood_datasets,
                            const std::vector<DetectionCell>& cells);

// `bin_low,bin_high,count_in,count_out`, one line per bin.
std::string histogram_csv(const std::vector<std::size_t>& in_counts,
                          const std::vector<std::size_t>& out_counts);

nlohmann::json to_json(const ConfidenceStats& stats);
nlohmann::json to_json(const DetectionCell& cell);

}  // namespace fitted::report

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fitted {

// In-distribution samples are positives; a sample is "detected as
// in-distribution" at threshold t when its confidence is >= t. Thresholds are
// restricted to observed values, so every metric below is an exact finite
// computation with no interpolation.

// FPR at the largest threshold t whose TPR (fraction of in_conf >= t) is at
// least tpr_target. Throws EmptyInputError, OutOfRangeError (target not in (0,1]).
double fpr_at_tpr(std::span<const double> in_conf, std::span<const double> out_conf,
                  double tpr_target = 0.95);

// P(in > out) + 0.5 P(in == out) over all (in, out) pairs.
double auroc(std::span<const double> in_conf, std::span<const double> out_conf);

// min over t of 0.5 * P(in < t) + 0.5 * P(out >= t), t ranging over the
// observed values and +-infinity.
double detection_error(std::span<const double> in_conf, std::span<const double> out_conf);

// Uniform bins over [0,1]; bin = min(floor(c * bins), bins - 1).
// Throws OutOfRangeError for confidences outside [0,1].
std::vector<std::size_t> confidence_histogram(std::span<const double> confidences,
                                              std::size_t num_bins = 20);

struct ConfidenceSample {
  double confidence = 0.0;
  bool in_distribution = true;
  std::optional<bool> correct;  // only meaningful for in-distribution samples
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t count = 0;
};

// Empty subgroups are std::nullopt rather than zero.
struct ConfidenceStats {
  std::optional<MeanStd> miss;
  std::optional<MeanStd> correct;
  std::optional<MeanStd> total;
  std::optional<double> accuracy;
};

// Statistics over the in-distribution samples only.
// Throws EmptyInputError when there are none.
ConfidenceStats confidence_stats(std::span<const ConfidenceSample> samples);

std::optional<MeanStd> mean_std(std::span<const double> values);

struct DetectionMetrics {
  double fpr_at_95_tpr = 0.0;
  double auroc = 0.0;
  double detection_error = 0.0;
  std::size_t in_count = 0;
  std::size_t out_count = 0;
};

DetectionMetrics detection_metrics(std::span<const double> in_conf,
                                   std::span<const double> out_conf);

}  // namespace fitted

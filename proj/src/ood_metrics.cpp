#include "fitted/ood_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fitted/errors.hpp"

namespace fitted {

namespace {

void require_nonempty(std::span<const double> in_conf, std::span<const double> out_conf,
                      const char* what) {
  if (in_conf.empty() || out_conf.empty()) {
    throw EmptyInputError(std::string(what) + ": both confidence lists must be non-empty");
  }
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Number of entries of the ascending vector that are >= t.
std::size_t count_at_least(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(sorted.end() -
                                  std::lower_bound(sorted.begin(), sorted.end(), t));
}

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double fpr_at_tpr(std::span<const double> in_conf, std::span<const double> out_conf,
                  double tpr_target) {
  require_nonempty(in_conf, out_conf, "fpr_at_tpr");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    throw OutOfRangeError("fpr_at_tpr: target TPR must be in (0,1]");
  }
  const auto in_sorted = sorted_copy(in_conf);
  const auto out_sorted = sorted_copy(out_conf);
  const std::size_t n = in_sorted.size();
  // Walk distinct in-distribution values from the top; the first that reaches
  // the target is the largest admissible threshold.
  double threshold = in_sorted.front();
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n && in_sorted[i] == in_sorted[i + 1]) continue;
    const std::size_t passing = count_at_least(in_sorted, in_sorted[i]);
    if (ratio(passing, n) >= tpr_target) {
      threshold = in_sorted[i];
      break;
    }
  }
  return ratio(count_at_least(out_sorted, threshold), out_sorted.size());
}

double auroc(std::span<const double> in_conf, std::span<const double> out_conf) {
  require_nonempty(in_conf, out_conf, "auroc");
  const auto in_sorted = sorted_copy(in_conf);
  const auto out_sorted = sorted_copy(out_conf);
  // 2 * wins + ties over all (in, out) pairs.
  std::size_t twice_score = 0;
  for (double v : in_sorted) {
    const auto lo = std::lower_bound(out_sorted.begin(), out_sorted.end(), v);
    const auto hi = std::upper_bound(lo, out_sorted.end(), v);
    const auto below = static_cast<std::size_t>(lo - out_sorted.begin());
    const auto equal = static_cast<std::size_t>(hi - lo);
    twice_score += 2 * below + equal;
  }
  return ratio(twice_score, 2 * in_sorted.size() * out_sorted.size());
}

double detection_error(std::span<const double> in_conf, std::span<const double> out_conf) {
  require_nonempty(in_conf, out_conf, "detection_error");
  const auto in_sorted = sorted_copy(in_conf);
  const auto out_sorted = sorted_copy(out_conf);
  const std::size_t n = in_sorted.size();
  const std::size_t m = out_sorted.size();

  std::vector<double> candidates;
  candidates.reserve(n + m + 2);
  candidates.push_back(-std::numeric_limits<double>::infinity());
  candidates.insert(candidates.end(), in_sorted.begin(), in_sorted.end());
  candidates.insert(candidates.end(), out_sorted.begin(), out_sorted.end());
  candidates.push_back(std::numeric_limits<double>::infinity());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double best = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const std::size_t missed = n - count_at_least(in_sorted, t);
    const std::size_t false_pos = count_at_least(out_sorted, t);
    best = std::min(best, 0.5 * ratio(missed, n) + 0.5 * ratio(false_pos, m));
  }
  return best;
}

std::vector<std::size_t> confidence_histogram(std::span<const double> confidences,
                                              std::size_t num_bins) {
  if (num_bins < 1) throw OutOfRangeError("histogram: need at least one bin");
  std::vector<std::size_t> counts(num_bins, 0);
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw OutOfRangeError("histogram: confidence " + std::to_string(c) + " outside [0,1]");
    }
    auto bin = static_cast<std::size_t>(std::floor(c * static_cast<double>(num_bins)));
    counts[std::min(bin, num_bins - 1)] += 1;
  }
  return counts;
}

std::optional<MeanStd> mean_std(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  MeanStd s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

ConfidenceStats confidence_stats(std::span<const ConfidenceSample> samples) {
  std::vector<double> miss, correct, total;
  for (const auto& s : samples) {
    if (!s.in_distribution) continue;
    total.push_back(s.confidence);
    if (s.correct.has_value()) (*s.correct ? correct : miss).push_back(s.confidence);
  }
  if (total.empty()) throw EmptyInputError("confidence_stats: no in-distribution samples");
  ConfidenceStats stats;
  stats.miss = mean_std(miss);
  stats.correct = mean_std(correct);
  stats.total = mean_std(total);
  if (!miss.empty() || !correct.empty()) {
    stats.accuracy = ratio(correct.size(), correct.size() + miss.size());
  }
  return stats;
}

DetectionMetrics detection_metrics(std::span<const double> in_conf,
                                   std::span<const double> out_conf) {
  DetectionMetrics m;
  m.fpr_at_95_tpr = fpr_at_tpr(in_conf, out_conf, 0.95);
  m.auroc = auroc(in_conf, out_conf);
  m.detection_error = detection_error(in_conf, out_conf);
  m.in_count = in_conf.size();
  m.out_count = out_conf.size();
  return m;
}

}  // namespace fitted

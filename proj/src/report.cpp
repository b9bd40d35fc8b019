#include "fitted/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fitted/errors.hpp"

namespace fitted::report {

using nlohmann::json;

double percent(double rate) { return std::round(rate * 10000.0) / 100.0; }

std::string percent_text(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", percent(rate));
  return buf;
}

namespace {

std::string mean_std_cell(const std::optional<MeanStd>& v) {
  if (!v) return "n/a";
  return percent_text(v->mean) + "(" + percent_text(v->stddev) + ")";
}

void header_row(std::ostringstream& os, const std::string& first,
                const std::vector<std::string>& columns) {
  os << "| " << first;
  for (const auto& c : columns) os << " | " << c;
  os << " |\n|---";
  for (std::size_t i = 0; i < columns.size(); ++i) os << "|---";
  os << "|\n";
}

void row(std::ostringstream& os, const std::string& label, const std::vector<std::string>& cells) {
  os << "| " << label;
  for (const auto& c : cells) os << " | " << c;
  os << " |\n";
}

}  // namespace

std::string confidence_table(const std::vector<NamedStats>& models) {
  std::vector<std::string> names;
  std::vector<std::string> miss, correct, total, acc;
  for (const auto& m : models) {
    names.push_back(m.model);
    miss.push_back(mean_std_cell(m.stats.miss));
    correct.push_back(mean_std_cell(m.stats.correct));
    total.push_back(m.stats.total ? percent_text(m.stats.total->mean) : "n/a");
    acc.push_back(m.stats.accuracy ? percent_text(*m.stats.accuracy) : "n/a");
  }
  std::ostringstream os;
  header_row(os, "metric", names);
  row(os, kMissRow, miss);
  row(os, kCorrectRow, correct);
  row(os, kTotalRow, total);
  row(os, kAccuracyRow, acc);
  return os.str();
}

std::string detection_table(const std::vector<std::string>& models,
                            const std::vector<std::string>& ood_datasets,
                            const std::vector<DetectionCell>& cells) {
  auto find = [&](const std::string& model, const std::string& ds) -> const DetectionMetrics* {
    for (const auto& c : cells) {
      if (c.model == model && c.ood_dataset == ds) return &c.metrics;
    }
    return nullptr;
  };
  std::ostringstream os;
  header_row(os, "dataset & metric", models);
  const std::vector<std::string> blank(models.size(), "");
  const struct {
    const char* title;
    double DetectionMetrics::*field;
  } sections[] = {{kFprSection, &DetectionMetrics::fpr_at_95_tpr},
                  {kAurocSection, &DetectionMetrics::auroc},
                  {kDetectionSection, &DetectionMetrics::detection_error}};
  for (const auto& section : sections) {
    row(os, std::string("**") + section.title + "**", blank);
    for (const auto& ds : ood_datasets) {
      std::vector<std::string> values;
      for (const auto& m : models) {
        const auto* metrics = find(m, ds);
        values.push_back(metrics ? percent_text(metrics->*section.field) : "n/a");
      }
      row(os, ds, values);
    }
  }
  return os.str();
}

std::string histogram_csv(const std::vector<std::size_t>& in_counts,
                          const std::vector<std::size_t>& out_counts) {
  if (in_counts.size() != out_counts.size()) {
    throw ShapeMismatchError("histogram: in/out bin counts differ");
  }
  std::ostringstream os;
  os << "bin_low,bin_high,count_in,count_out\n";
  const auto bins = static_cast<double>(in_counts.size());
  char buf[64];
  for (std::size_t b = 0; b < in_counts.size(); ++b) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,", static_cast<double>(b) / bins,
                  static_cast<double>(b + 1) / bins);
    os << buf << in_counts[b] << ',' << out_counts[b] << '\n';
  }
  return os.str();
}

json to_json(const ConfidenceStats& stats) {
  auto ms = [](const std::optional<MeanStd>& v) -> json {
    if (!v) return nullptr;
    return json{{"mean", percent(v->mean)}, {"std", percent(v->stddev)}, {"count", v->count}};
  };
  return json{{"avg_miss_conf", ms(stats.miss)},
              {"avg_correct_conf", ms(stats.correct)},
              {"avg_total_conf", ms(stats.total)},
              {"accuracy", stats.accuracy ? json(percent(*stats.accuracy)) : json(nullptr)}};
}

json to_json(const DetectionCell& cell) {
  return json{{"model", cell.model},
              {"ood_dataset", cell.ood_dataset},
              {"fpr_at_95_tpr", percent(cell.metrics.fpr_at_95_tpr)},
              {"auroc", percent(cell.metrics.auroc)},
              {"detection_error", percent(cell.metrics.detection_error)},
              {"in_count", cell.metrics.in_count},
              {"out_count", cell.metrics.out_count}};
}

}  // namespace fitted::report

#include "fitted/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "fitted/csv.hpp"
#include "fitted/errors.hpp"
#include "fitted/random.hpp"
#include "fitted/space_io.hpp"

namespace fitted {

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic: num_classes must be >= 2");
  if (dims < 1) throw ConfigError("synthetic: dims must be >= 1");
  if (per_class_count < 1) throw ConfigError("synthetic: per_class_count must be >= 1");
  if (!(noise_sigma > 0.0)) throw ConfigError("synthetic: noise_sigma must be > 0");
  if (!std::isfinite(class_mean_scale)) throw ConfigError("synthetic: non-finite mean scale");
}

Matrix blob_means(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k_count = spec.num_classes;
  Matrix means(k_count, spec.dims, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (spec.dims >= k_count) {
      means(k, k) = spec.class_mean_scale;
    } else if (spec.dims >= 2) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(k_count);
      means(k, 0) = spec.class_mean_scale * std::cos(angle);
      means(k, 1) = spec.class_mean_scale * std::sin(angle);
    } else {
      means(k, 0) = spec.class_mean_scale * static_cast<double>(k);
    }
  }
  return means;
}

LabeledDataset gen_gaussian_blobs(const SyntheticSpec& spec) {
  const Matrix means = blob_means(spec);
  const std::size_t rows = spec.num_classes * spec.per_class_count;
  Matrix features(rows, spec.dims);
  std::vector<ClassIndex> labels(rows);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    Rng rng(derive_seed(spec.seed, k));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (std::size_t i = 0; i < spec.per_class_count; ++i) {
      const std::size_t r = k * spec.per_class_count + i;
      labels[r] = k;
      for (std::size_t d = 0; d < spec.dims; ++d) features(r, d) = means(k, d) + noise(rng);
    }
  }
  return LabeledDataset(std::move(features), std::move(labels), spec.num_classes);
}

Matrix gen_uniform_noise(std::size_t count, std::size_t dims, double low, double high,
                         std::uint64_t seed) {
  if (!(low < high)) throw ConfigError("uniform noise: need low < high");
  Matrix out(count, dims);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(low, high);
  for (double& v : out.values()) v = u(rng);
  return out;
}

LabeledDataset split_by_classes(const LabeledDataset& data, const std::set<ClassIndex>& keep,
                                bool relabel_dense) {
  if (keep.empty()) throw ConfigError("split_by_classes: empty class selection");
  std::vector<std::size_t> dense(data.num_classes(), 0);
  std::size_t next = 0;
  for (ClassIndex c : keep) {
    if (c >= data.num_classes()) {
      throw UnknownClassError("split_by_classes: class " + std::to_string(c) +
                              " not in a dataset of " + std::to_string(data.num_classes()) +
                              " classes");
    }
    dense[c] = next++;
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (keep.contains(data.labels()[i])) rows.push_back(i);
  }
  std::vector<ClassIndex> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    const ClassIndex y = data.labels()[r];
    labels.push_back(relabel_dense ? dense[y] : y);
  }
  return LabeledDataset(data.features().select_rows(rows), std::move(labels),
                        relabel_dense ? keep.size() : data.num_classes());
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("train_test_split: test_fraction must be in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels()[i]].push_back(i);

  std::vector<bool> is_test(data.size(), false);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.empty()) continue;
    Rng rng(derive_seed(seed, k));
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    n_test = std::min(n_test, rows.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) is_test[rows[i]] = true;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (is_test[i] ? test_rows : train_rows).push_back(i);
  }
  return {data.select(train_rows), data.select(test_rows)};
}

LabeledDataset parse_csv_dataset(const std::string& text, const std::string& source,
                                 std::optional<std::size_t> num_classes) {
  const auto lines = csv::split_lines(text);
  if (lines.empty()) throw SchemaError(source + ": empty file");
  const auto header = csv::split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "label") {
    throw SchemaError(source + ": header must be `label,f0,f1,...`");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 1)) {
      throw SchemaError(source + ": header column " + std::to_string(j) + " must be `f" +
                        std::to_string(j - 1) + "`");
    }
  }
  const std::size_t dims = header.size() - 1;
  std::vector<double> values;
  std::vector<ClassIndex> labels;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto fields = csv::split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no, "expected " + std::to_string(header.size()) +
                                            " fields, got " + std::to_string(fields.size()));
    }
    std::size_t label = 0;
    if (!csv::parse_index(fields[0], label)) {
      throw ParseError(source, line_no, "label `" + std::string(fields[0]) +
                                            "` is not a non-negative integer");
    }
    labels.push_back(label);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!csv::parse_double(fields[j], v)) {
        throw ParseError(source, line_no, "feature `" + std::string(fields[j]) +
                                              "` is not a number");
      }
      if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite feature value");
      values.push_back(v);
    }
  }
  std::size_t n_classes = 0;
  if (num_classes) {
    n_classes = *num_classes;
  } else if (!labels.empty()) {
    n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  }
  const std::size_t rows = labels.size();
  try {
    return LabeledDataset(Matrix(rows, dims, std::move(values)), std::move(labels), n_classes);
  } catch (const Error& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

LabeledDataset load_csv_dataset(const std::filesystem::path& path,
                                std::optional<std::size_t> num_classes) {
  return parse_csv_dataset(read_text_file(path), path.string(), num_classes);
}

void save_csv_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "label";
  for (std::size_t d = 0; d < data.dims(); ++d) os << ",f" << d;
  os << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << data.labels()[i];
    for (double v : data.features().row(i)) os << ',' << csv::format_double(v);
    os << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace fitted

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <utility>

#include "fitted/labeled_dataset.hpp"

namespace fitted {

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t dims = 2;
  std::size_t per_class_count = 100;
  double class_mean_scale = 1.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Class means, one row per class:
//   dims >= num_classes : scale * e_k (simplex corners)
//   2 <= dims           : scale * (cos 2pi k/K, sin 2pi k/K, 0, ...) (circle)
//   dims == 1           : scale * k (line)
Matrix blob_means(const SyntheticSpec& spec);

// Isotropic Gaussian blobs around blob_means. Rows are class-major; each
// class draws from its own stream derived from (seed, class).
LabeledDataset gen_gaussian_blobs(const SyntheticSpec& spec);

// count x dims matrix of independent U(low, high) features.
Matrix gen_uniform_noise(std::size_t count, std::size_t dims, double low, double high,
                         std::uint64_t seed);

// Rows whose label is in `keep`, in original order. With relabel_dense the
// kept classes are renumbered 0..|keep|-1 in ascending original order.
LabeledDataset split_by_classes(const LabeledDataset& data, const std::set<ClassIndex>& keep,
                                bool relabel_dense);

// Stratified split. Per class, round(test_fraction * count) shuffled rows go
// to test, capped so at least one row of each class stays in train. Both
// halves keep the original row order.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data,
                                                           double test_fraction,
                                                           std::uint64_t seed);

// CSV with header `label,f0,f1,...`. num_classes defaults to max label + 1.
LabeledDataset load_csv_dataset(const std::filesystem::path& path,
                                std::optional<std::size_t> num_classes = std::nullopt);
LabeledDataset parse_csv_dataset(const std::string& text, const std::string& source,
                                 std::optional<std::size_t> num_classes = std::nullopt);
// Features written with 17 significant digits.
void save_csv_dataset(const LabeledDataset& data, const std::filesystem::path& path);

}  // namespace fitted

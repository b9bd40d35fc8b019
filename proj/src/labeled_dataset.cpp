#include "fitted/labeled_dataset.hpp"

#include <cmath>

#include "fitted/errors.hpp"

namespace fitted {

LabeledDataset::LabeledDataset(Matrix features, std::vector<ClassIndex> labels,
                               std::size_t num_classes)
    : features_(std::move(features)), labels_(std::move(labels)), num_classes_(num_classes) {
  if (features_.rows() != labels_.size()) {
    throw ShapeMismatchError("dataset: " + std::to_string(features_.rows()) +
                             " feature rows but " + std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      throw UnknownClassError("dataset row " + std::to_string(i) + ": label " +
                              std::to_string(labels_[i]) + " >= num_classes " +
                              std::to_string(num_classes_));
    }
  }
  for (double v : features_.values()) {
    if (!std::isfinite(v)) throw SchemaError("dataset: non-finite feature value");
  }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (ClassIndex y : labels_) ++counts[y];
  return counts;
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> rows) const {
  std::vector<ClassIndex> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(labels_.at(r));
  return LabeledDataset(features_.select_rows(rows), std::move(labels), num_classes_);
}

}  // namespace fitted

#pragma once

#include <cstddef>
#include <vector>

#include "fitted/class_spaces.hpp"
#include "fitted/matrix.hpp"

namespace fitted {

// Feature rows with one class label each. The constructor rejects labels
// >= num_classes and non-finite features.
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, std::vector<ClassIndex> labels, std::size_t num_classes);

  const Matrix& features() const noexcept { return features_; }
  const std::vector<ClassIndex>& labels() const noexcept { return labels_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return features_.cols(); }
  bool empty() const noexcept { return labels_.empty(); }

  // Rows per class, indexed by class.
  std::vector<std::size_t> class_counts() const;

  LabeledDataset select(std::span<const std::size_t> rows) const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  Matrix features_;
  std::vector<ClassIndex> labels_;
  std::size_t num_classes_;
};

}  // namespace fitted

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fitted/class_spaces.hpp"
#include "fitted/labeled_dataset.hpp"
#include "fitted/matrix.hpp"
#include "fitted/trainer.hpp"

namespace fitted {

// A partition of the class set whose parts all hold at least two classes.
// Stored canonically like SuperclassSpace.
class SclPartition {
 public:
  SclPartition(std::vector<Block> parts, std::size_t num_classes);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_parts() const noexcept { return parts_.size(); }
  const std::vector<Block>& parts() const noexcept { return parts_; }
  const Block& part(std::size_t k) const { return parts_.at(k); }

  std::size_t part_of(ClassIndex c) const { return part_of_.at(c); }
  // Position of `c` inside its part (ascending original index).
  std::size_t local_index(ClassIndex c) const { return local_.at(c); }

  bool operator==(const SclPartition&) const = default;

 private:
  std::vector<Block> parts_;
  std::size_t num_classes_;
  std::vector<std::size_t> part_of_;
  std::vector<std::size_t> local_;
};

// Maps feature rows to per-class scores over one part's classes, in the
// part's local order. Scores are probabilities for plain models and raw
// rectified bounds for fitted ones.
using PartScorer = std::function<Matrix(const Matrix& features)>;

struct SclModelSet {
  SclPartition partition;
  std::vector<PartScorer> part_models;
};

// Places each part's scores at their classes' global positions without
// normalising. Throws ArityMismatchError.
std::vector<double> merge_scores(std::span<const std::vector<double>> part_outputs,
                                 const SclPartition& partition);

// merge_scores followed by division by the total. With require_stochastic,
// each part output must sum to 1 within 1e-6 (OutOfRangeError otherwise).
std::vector<double> concat_scores(std::span<const std::vector<double>> part_outputs,
                                  const SclPartition& partition, bool require_stochastic = true);

// Loss of a merged score vector against the true label.
using SclLoss = std::function<double(std::span<const double> merged, ClassIndex label)>;

// 1 when the argmax (ties to the lowest index) equals the label, else 0.
double correct_indicator(std::span<const double> merged, ClassIndex label);

// Mean loss over the test set of the merged model.
double separable_risk(const SclModelSet& models, const Matrix& features,
                      std::span<const ClassIndex> labels, const SclLoss& loss);

struct SclResult {
  double scl_accuracy = 0.0;
  double routed_accuracy_bound = 0.0;
  double gap = 0.0;
  // Routed accuracy over the test rows whose label lies in each part;
  // nullopt for a part with no test rows.
  std::vector<std::optional<double>> per_part_accuracy;
  SclPartition partition;
};

// Fraction of test rows where the merged model's argmax is the true class.
double scl_accuracy_only(const SclModelSet& models, const Matrix& features,
                         std::span<const ClassIndex> labels);

// Each row is scored only by the part model owning its label, and judged
// within that part.
double routed_accuracy_bound(const SclModelSet& models, const Matrix& features,
                             std::span<const ClassIndex> labels);

SclResult scl_accuracy(const SclModelSet& models, const Matrix& features,
                       std::span<const ClassIndex> labels);

// `count` random partitions with at least `min_parts` parts, each part of size
// >= min_part_size. Throws InfeasibleConstraintError when impossible.
std::vector<SclPartition> sample_partitions(std::size_t n, std::size_t count,
                                            std::size_t min_part_size, std::uint64_t seed,
                                            std::size_t min_parts = 2);

// First half / second half of the classes.
SclPartition halves_partition(std::size_t n);

enum class SclBuilderKind { kPlain, kFitted };

struct SclBuilder {
  SclBuilderKind kind = SclBuilderKind::kPlain;
  // Spec used for every part when fitted; nullopt picks default_part_spec.
  std::optional<FittedEnsembleSpec> part_spec;
  // Number of independently seeded models (or fitted ensembles) averaged per part.
  std::size_t ensemble_size = 1;
};

// Consecutive pairs at offsets 0 and 1 plus the identity space for parts of
// four or more classes; the identity space alone below that.
FittedEnsembleSpec default_part_spec(std::size_t part_size);

// Trains per-part models on class-filtered training data (labels remapped to
// the part's local order) and evaluates them on the shared test set.
// Throws EmptyPartDataError when a class of some part has no training rows.
SclResult run_scl_experiment(const LabeledDataset& train, const LabeledDataset& test,
                             const SclPartition& partition, const SclBuilder& builder,
                             const TrainConfig& config);

}  // namespace fitted

#pragma once

#include <span>
#include <vector>

#include "fitted/class_spaces.hpp"
#include "fitted/labeled_dataset.hpp"
#include "fitted/matrix.hpp"
#include "fitted/trainer.hpp"

namespace fitted {

// One member's output: a row-stochastic matrix over the blocks of `space`.
struct MemberPrediction {
  SuperclassSpace space;
  Matrix probabilities;  // rows x space.num_blocks()
};

// M x n matrix of per-class upper bounds in [0,1]. Rows are deliberately not
// normalised: a row summing to far less than one is a rejected example.
using RectifiedScores = Matrix;

// For every example and class y: the minimum, over members, of the
// probability the member gives to the block containing y (starting from 1).
// Throws EmptyMemberListError, ShapeMismatchError, OutOfRangeError.
RectifiedScores rectify(std::span<const MemberPrediction> members, std::size_t num_classes);

struct Prediction {
  ClassIndex label = 0;
  double confidence = 0.0;  // raw maximum rectified value
};

// Argmax per row, ties to the lowest class index.
std::vector<Prediction> predict(const RectifiedScores& scores);
Prediction predict_row(std::span<const double> row);

// Divides each row by its sum; all-zero rows become uniform.
Matrix normalize_rows(const Matrix& scores);

struct EnsembleMember {
  std::size_t sequel_index;  // == spec.sequels.size() for the identity member
  std::size_t space_index;
  SuperclassSpace space;
  Classifier classifier;
  bool identity = false;
};

class FittedEnsemble {
 public:
  FittedEnsemble(FittedEnsembleSpec spec, std::vector<EnsembleMember> members);

  const FittedEnsembleSpec& spec() const noexcept { return spec_; }
  const std::vector<EnsembleMember>& members() const noexcept { return members_; }
  // Index of the identity member, if any.
  std::optional<std::size_t> identity_index() const;

  // Every member's predict_proba on `features`, in member order.
  std::vector<MemberPrediction> member_predictions(const Matrix& features) const;

 private:
  FittedEnsembleSpec spec_;
  std::vector<EnsembleMember> members_;
};

// Trains one member per space (sequel-major, space-minor, identity last) on
// the relabelled data. Member i trains with seed derive_seed(config.seed, i);
// members train concurrently.
FittedEnsemble build_fitted_ensemble(const LabeledDataset& data, const FittedEnsembleSpec& spec,
                                     const TrainConfig& config);

RectifiedScores ensemble_predict(const FittedEnsemble& ensemble, const Matrix& features);

// Uniform average of positionally corresponding member predictions.
// Throws SpecMismatchError when the lists disagree in length or spaces.
std::vector<MemberPrediction> average_member_predictions(
    std::span<const std::vector<MemberPrediction>> per_ensemble);

// Averages corresponding members across ensembles, then rectifies once.
// Throws SpecMismatchError unless every ensemble has the same spec.
RectifiedScores aggregate_ensembles(std::span<const FittedEnsemble> ensembles,
                                    const Matrix& features);

}  // namespace fitted

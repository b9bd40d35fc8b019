#include "fitted/rectifier.hpp"

#include <algorithm>
#include <future>

#include "fitted/errors.hpp"
#include "fitted/random.hpp"

namespace fitted {

RectifiedScores rectify(std::span<const MemberPrediction> members, std::size_t num_classes) {
  if (members.empty()) throw EmptyMemberListError("rectify: no member predictions");
  const std::size_t rows = members.front().probabilities.rows();
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& mp = members[m];
    if (mp.space.num_classes() != num_classes) {
      throw ShapeMismatchError("rectify: member " + std::to_string(m) + " space covers " +
                               std::to_string(mp.space.num_classes()) + " classes, expected " +
                               std::to_string(num_classes));
    }
    if (mp.probabilities.cols() != mp.space.num_blocks()) {
      throw ShapeMismatchError("rectify: member " + std::to_string(m) + " has " +
                               std::to_string(mp.probabilities.cols()) + " columns for " +
                               std::to_string(mp.space.num_blocks()) + " blocks");
    }
    if (mp.probabilities.rows() != rows) {
      throw ShapeMismatchError("rectify: member " + std::to_string(m) + " has " +
                               std::to_string(mp.probabilities.rows()) + " rows, expected " +
                               std::to_string(rows));
    }
    for (double v : mp.probabilities.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw OutOfRangeError("rectify: member " + std::to_string(m) +
                              " has a probability outside [0,1]");
      }
    }
  }

  RectifiedScores out(rows, num_classes, 1.0);
  for (const auto& mp : members) {
    const auto& blocks = mp.space.blocks();
    for (std::size_t r = 0; r < rows; ++r) {
      auto bound = mp.probabilities.row(r);
      auto dst = out.row(r);
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        for (ClassIndex s : blocks[j]) dst[s] = std::min(dst[s], bound[j]);
      }
    }
  }
  return out;
}

Prediction predict_row(std::span<const double> row) {
  Prediction p;
  if (row.empty()) return p;
  p.confidence = row[0];
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > p.confidence) {
      p.confidence = row[c];
      p.label = c;
    }
  }
  return p;
}

std::vector<Prediction> predict(const RectifiedScores& scores) {
  std::vector<Prediction> out;
  out.reserve(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) out.push_back(predict_row(scores.row(r)));
  return out;
}

Matrix normalize_rows(const Matrix& scores) {
  Matrix out = scores;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum > 0.0) {
      for (double& v : row) v /= sum;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    }
  }
  return out;
}

FittedEnsemble::FittedEnsemble(FittedEnsembleSpec spec, std::vector<EnsembleMember> members)
    : spec_(std::move(spec)), members_(std::move(members)) {
  if (members_.size() != spec_.member_count()) {
    throw SpecMismatchError("fitted ensemble: " + std::to_string(members_.size()) +
                            " members for a spec with " + std::to_string(spec_.member_count()) +
                            " spaces");
  }
  const auto spaces = spec_.member_spaces();
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (!(members_[i].space == spaces[i])) {
      throw SpecMismatchError("fitted ensemble: member " + std::to_string(i) +
                              " does not match its spec space");
    }
    if (members_[i].classifier.num_outputs() != spaces[i].num_blocks()) {
      throw SpecMismatchError("fitted ensemble: member " + std::to_string(i) + " predicts " +
                              std::to_string(members_[i].classifier.num_outputs()) +
                              " outputs for " + std::to_string(spaces[i].num_blocks()) +
                              " blocks");
    }
  }
}

std::optional<std::size_t> FittedEnsemble::identity_index() const {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i].identity) return i;
  }
  return std::nullopt;
}

std::vector<MemberPrediction> FittedEnsemble::member_predictions(const Matrix& features) const {
  std::vector<MemberPrediction> out;
  out.reserve(members_.size());
  for (const auto& m : members_) {
    out.push_back(MemberPrediction{m.space, m.classifier.predict_proba(features)});
  }
  return out;
}

FittedEnsemble build_fitted_ensemble(const LabeledDataset& data, const FittedEnsembleSpec& spec,
                                     const TrainConfig& config) {
  config.validate();
  if (data.num_classes() != spec.num_classes()) {
    throw ShapeMismatchError("build_fitted_ensemble: dataset has " +
                             std::to_string(data.num_classes()) + " classes, spec has " +
                             std::to_string(spec.num_classes()));
  }
  struct Slot {
    std::size_t sequel;
    std::size_t space;
    bool identity;
  };
  std::vector<Slot> slots;
  for (std::size_t s = 0; s < spec.sequels.size(); ++s) {
    for (std::size_t j = 0; j < spec.sequels[s].size(); ++j) slots.push_back({s, j, false});
  }
  if (spec.include_identity) slots.push_back({spec.sequels.size(), 0, true});
  const auto spaces = spec.member_spaces();

  std::vector<std::future<Classifier>> jobs;
  jobs.reserve(spaces.size());
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const auto& space = spaces[i];
      LabeledDataset relabelled(data.features(), relabel(data.labels(), space),
                                space.num_blocks());
      TrainConfig member_config = config;
      member_config.seed = derive_seed(config.seed, i);
      return train(relabelled, member_config);
    }));
  }
  std::vector<EnsembleMember> members;
  members.reserve(spaces.size());
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    members.push_back(EnsembleMember{slots[i].sequel, slots[i].space, spaces[i], jobs[i].get(),
                                     slots[i].identity});
  }
  return FittedEnsemble(spec, std::move(members));
}

RectifiedScores ensemble_predict(const FittedEnsemble& ensemble, const Matrix& features) {
  const auto preds = ensemble.member_predictions(features);
  return rectify(preds, ensemble.spec().num_classes());
}

std::vector<MemberPrediction> average_member_predictions(
    std::span<const std::vector<MemberPrediction>> per_ensemble) {
  if (per_ensemble.empty()) throw EmptyMemberListError("average: no ensembles");
  const auto& first = per_ensemble.front();
  for (std::size_t e = 1; e < per_ensemble.size(); ++e) {
    const auto& other = per_ensemble[e];
    if (other.size() != first.size()) {
      throw SpecMismatchError("ensemble " + std::to_string(e) + " has " +
                              std::to_string(other.size()) + " members, expected " +
                              std::to_string(first.size()));
    }
    for (std::size_t m = 0; m < first.size(); ++m) {
      if (!(other[m].space == first[m].space)) {
        throw SpecMismatchError("ensemble " + std::to_string(e) + " member " +
                                std::to_string(m) + " uses a different superclass space");
      }
      if (other[m].probabilities.rows() != first[m].probabilities.rows() ||
          other[m].probabilities.cols() != first[m].probabilities.cols()) {
        throw ShapeMismatchError("ensemble " + std::to_string(e) + " member " +
                                 std::to_string(m) + " prediction shape differs");
      }
    }
  }
  std::vector<MemberPrediction> out = first;
  if (per_ensemble.size() == 1) return out;
  const auto count = static_cast<double>(per_ensemble.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    auto dst = out[m].probabilities.values();
    std::fill(dst.begin(), dst.end(), 0.0);
    for (const auto& ens : per_ensemble) {
      auto src = ens[m].probabilities.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    for (double& v : dst) v = std::clamp(v / count, 0.0, 1.0);
  }
  return out;
}

RectifiedScores aggregate_ensembles(std::span<const FittedEnsemble> ensembles,
                                    const Matrix& features) {
  if (ensembles.empty()) throw EmptyMemberListError("aggregate: no ensembles");
  for (std::size_t e = 1; e < ensembles.size(); ++e) {
    if (!(ensembles[e].spec() == ensembles.front().spec())) {
      throw SpecMismatchError("aggregate: ensemble " + std::to_string(e) +
                              " was built from a different spec");
    }
  }
  std::vector<std::vector<MemberPrediction>> per_ensemble;
  per_ensemble.reserve(ensembles.size());
  for (const auto& e : ensembles) per_ensemble.push_back(e.member_predictions(features));
  return rectify(average_member_predictions(per_ensemble), ensembles.front().spec().num_classes());
}

}  // namespace fitted

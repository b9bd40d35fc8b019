#include "fitted/scl_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fitted/datasets.hpp"
#include "fitted/errors.hpp"
#include "fitted/random.hpp"
#include "fitted/rectifier.hpp"

namespace fitted {

SclPartition::SclPartition(std::vector<Block> parts, std::size_t num_classes)
    : num_classes_(num_classes) {
  for (const auto& p : parts) {
    if (p.size() < 2) {
      throw InfeasibleConstraintError("SCL partition parts need at least 2 classes, got " +
                                      std::to_string(p.size()));
    }
  }
  // Same partition rules as a superclass space; reuse its validation and
  // canonical ordering.
  SuperclassSpace canonical(std::move(parts), num_classes);
  parts_ = canonical.blocks();
  part_of_.assign(num_classes_, 0);
  local_.assign(num_classes_, 0);
  for (std::size_t k = 0; k < parts_.size(); ++k) {
    for (std::size_t i = 0; i < parts_[k].size(); ++i) {
      part_of_[parts_[k][i]] = k;
      local_[parts_[k][i]] = i;
    }
  }
}

std::vector<double> merge_scores(std::span<const std::vector<double>> part_outputs,
                                 const SclPartition& partition) {
  if (part_outputs.size() != partition.num_parts()) {
    throw ArityMismatchError("concat: " + std::to_string(part_outputs.size()) +
                             " part outputs for " + std::to_string(partition.num_parts()) +
                             " parts");
  }
  std::vector<double> merged(partition.num_classes(), 0.0);
  for (std::size_t k = 0; k < part_outputs.size(); ++k) {
    const auto& part = partition.part(k);
    if (part_outputs[k].size() != part.size()) {
      throw ArityMismatchError("concat: part " + std::to_string(k) + " output has " +
                               std::to_string(part_outputs[k].size()) + " scores for " +
                               std::to_string(part.size()) + " classes");
    }
    for (std::size_t i = 0; i < part.size(); ++i) merged[part[i]] = part_outputs[k][i];
  }
  return merged;
}

std::vector<double> concat_scores(std::span<const std::vector<double>> part_outputs,
                                  const SclPartition& partition, bool require_stochastic) {
  if (require_stochastic) {
    for (std::size_t k = 0; k < part_outputs.size(); ++k) {
      const double sum = std::accumulate(part_outputs[k].begin(), part_outputs[k].end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-6) {
        throw OutOfRangeError("concat: part " + std::to_string(k) + " output does not sum to 1");
      }
    }
  }
  auto merged = merge_scores(part_outputs, partition);
  const double total = std::accumulate(merged.begin(), merged.end(), 0.0);
  if (total > 0.0) {
    for (double& v : merged) v /= total;
  } else {
    std::fill(merged.begin(), merged.end(), 1.0 / static_cast<double>(merged.size()));
  }
  return merged;
}

double correct_indicator(std::span<const double> merged, ClassIndex label) {
  return predict_row(merged).label == label ? 1.0 : 0.0;
}

namespace {

// Runs every part model once over the whole test matrix.
std::vector<Matrix> score_parts(const SclModelSet& models, const Matrix& features,
                                std::span<const ClassIndex> labels) {
  const auto& partition = models.partition;
  if (models.part_models.size() != partition.num_parts()) {
    throw ArityMismatchError("SCL model set: " + std::to_string(models.part_models.size()) +
                             " models for " + std::to_string(partition.num_parts()) + " parts");
  }
  if (features.rows() != labels.size()) {
    throw ShapeMismatchError("SCL: feature rows and labels disagree");
  }
  for (ClassIndex y : labels) {
    if (y >= partition.num_classes()) {
      throw UnknownClassError("SCL: test label " + std::to_string(y) + " outside the partition");
    }
  }
  std::vector<Matrix> scores;
  for (std::size_t k = 0; k < partition.num_parts(); ++k) {
    Matrix s = models.part_models[k](features);
    if (s.rows() != features.rows() || s.cols() != partition.part(k).size()) {
      throw ArityMismatchError("SCL: part " + std::to_string(k) + " model returned " +
                               std::to_string(s.cols()) + " scores for " +
                               std::to_string(partition.part(k).size()) + " classes");
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

std::vector<double> row_merged(const std::vector<Matrix>& scores, std::size_t r,
                               const SclPartition& partition) {
  std::vector<std::vector<double>> outputs;
  outputs.reserve(scores.size());
  for (const auto& s : scores) outputs.emplace_back(s.row(r).begin(), s.row(r).end());
  return merge_scores(outputs, partition);
}

double fraction(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double separable_risk(const SclModelSet& models, const Matrix& features,
                      std::span<const ClassIndex> labels, const SclLoss& loss) {
  const auto scores = score_parts(models, features, labels);
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    std::vector<std::vector<double>> outputs;
    for (const auto& s : scores) outputs.emplace_back(s.row(r).begin(), s.row(r).end());
    total += loss(concat_scores(outputs, models.partition, false), labels[r]);
  }
  return total / static_cast<double>(labels.size());
}

double scl_accuracy_only(const SclModelSet& models, const Matrix& features,
                         std::span<const ClassIndex> labels) {
  const auto scores = score_parts(models, features, labels);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    // The final normalisation preserves order, so the argmax is taken on the
    // merged scores directly.
    if (predict_row(row_merged(scores, r, models.partition)).label == labels[r]) ++correct;
  }
  return fraction(correct, labels.size());
}

double routed_accuracy_bound(const SclModelSet& models, const Matrix& features,
                             std::span<const ClassIndex> labels) {
  const auto scores = score_parts(models, features, labels);
  const auto& partition = models.partition;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const std::size_t k = partition.part_of(labels[r]);
    if (predict_row(scores[k].row(r)).label == partition.local_index(labels[r])) ++correct;
  }
  return fraction(correct, labels.size());
}

SclResult scl_accuracy(const SclModelSet& models, const Matrix& features,
                       std::span<const ClassIndex> labels) {
  const auto scores = score_parts(models, features, labels);
  const auto& partition = models.partition;
  std::size_t scl_correct = 0;
  std::size_t routed_correct = 0;
  std::vector<std::size_t> part_total(partition.num_parts(), 0);
  std::vector<std::size_t> part_correct(partition.num_parts(), 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const ClassIndex y = labels[r];
    if (predict_row(row_merged(scores, r, partition)).label == y) ++scl_correct;
    const std::size_t k = partition.part_of(y);
    ++part_total[k];
    if (predict_row(scores[k].row(r)).label == partition.local_index(y)) {
      ++routed_correct;
      ++part_correct[k];
    }
  }
  SclResult result{fraction(scl_correct, labels.size()), fraction(routed_correct, labels.size()),
                   0.0, {}, partition};
  result.gap = result.routed_accuracy_bound - result.scl_accuracy;
  for (std::size_t k = 0; k < partition.num_parts(); ++k) {
    result.per_part_accuracy.push_back(
        part_total[k] ? std::optional<double>(fraction(part_correct[k], part_total[k]))
                      : std::nullopt);
  }
  return result;
}

std::vector<SclPartition> sample_partitions(std::size_t n, std::size_t count,
                                            std::size_t min_part_size, std::uint64_t seed,
                                            std::size_t min_parts) {
  if (min_part_size < 2) {
    throw InfeasibleConstraintError("sample_partitions: min_part_size must be >= 2");
  }
  if (min_parts < 1) min_parts = 1;
  if (n < min_parts * min_part_size) {
    throw InfeasibleConstraintError(
        "sample_partitions: " + std::to_string(n) + " classes cannot form " +
        std::to_string(min_parts) + " parts of at least " + std::to_string(min_part_size));
  }
  if (count < 1) throw ConfigError("sample_partitions: count must be >= 1");
  const std::size_t max_parts = n / min_part_size;
  std::vector<SclPartition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    const std::size_t k =
        std::uniform_int_distribution<std::size_t>(min_parts, max_parts)(rng);
    std::vector<std::size_t> sizes(k, min_part_size);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    for (std::size_t extra = n - k * min_part_size; extra > 0; --extra) ++sizes[pick(rng)];

    std::vector<ClassIndex> order(n);
    std::iota(order.begin(), order.end(), ClassIndex{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Block> parts;
    std::size_t start = 0;
    for (std::size_t s : sizes) {
      parts.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(start + s));
      start += s;
    }
    out.emplace_back(std::move(parts), n);
  }
  return out;
}

SclPartition halves_partition(std::size_t n) {
  if (n < 4) throw InfeasibleConstraintError("halves partition needs at least 4 classes");
  Block first, second;
  for (ClassIndex c = 0; c < n; ++c) (c < n / 2 ? first : second).push_back(c);
  return SclPartition({first, second}, n);
}

FittedEnsembleSpec default_part_spec(std::size_t part_size) {
  if (part_size >= 4) {
    std::vector<SuperclassSpace> spaces{
        gen_consecutive_pairs(part_size, 0, UnevenPolicy::kAllow),
        gen_consecutive_pairs(part_size, 1, UnevenPolicy::kAllow)};
    return FittedEnsembleSpec(ClassSet(part_size), {Sequel(std::move(spaces))}, true);
  }
  return FittedEnsembleSpec(ClassSet(part_size), {Sequel({identity_space(part_size)})}, false);
}

SclResult run_scl_experiment(const LabeledDataset& train_set, const LabeledDataset& test_set,
                             const SclPartition& partition, const SclBuilder& builder,
                             const TrainConfig& config) {
  config.validate();
  if (train_set.num_classes() != partition.num_classes() ||
      test_set.num_classes() != partition.num_classes()) {
    throw ShapeMismatchError("SCL: train, test and partition disagree on the class count");
  }
  if (builder.ensemble_size < 1) throw ConfigError("SCL: ensemble_size must be >= 1");
  const auto counts = train_set.class_counts();

  SclModelSet models{partition, {}};
  for (std::size_t k = 0; k < partition.num_parts(); ++k) {
    const Block& part = partition.part(k);
    for (ClassIndex c : part) {
      if (counts[c] == 0) {
        throw EmptyPartDataError("SCL: class " + std::to_string(c) + " of part " +
                                 std::to_string(k) + " has no training rows");
      }
    }
    const LabeledDataset part_data =
        split_by_classes(train_set, std::set<ClassIndex>(part.begin(), part.end()), true);
    const std::uint64_t part_seed = derive_seed(config.seed, k);

    if (builder.kind == SclBuilderKind::kPlain) {
      auto members = std::make_shared<std::vector<Classifier>>();
      for (std::size_t e = 0; e < builder.ensemble_size; ++e) {
        TrainConfig c = config;
        c.seed = derive_seed(part_seed, e);
        members->push_back(train(part_data, c));
      }
      models.part_models.push_back([members](const Matrix& x) {
        Matrix avg = members->front().predict_proba(x);
        for (std::size_t e = 1; e < members->size(); ++e) {
          const Matrix p = (*members)[e].predict_proba(x);
          for (std::size_t i = 0; i < avg.values().size(); ++i) avg.values()[i] += p.values()[i];
        }
        if (members->size() > 1) {
          for (double& v : avg.values()) v /= static_cast<double>(members->size());
        }
        return avg;
      });
    } else {
      const FittedEnsembleSpec spec =
          builder.part_spec ? *builder.part_spec : default_part_spec(part.size());
      if (spec.num_classes() != part.size()) {
        throw SpecMismatchError("SCL: part " + std::to_string(k) + " has " +
                                std::to_string(part.size()) + " classes but the fitted spec has " +
                                std::to_string(spec.num_classes()));
      }
      auto ensembles = std::make_shared<std::vector<FittedEnsemble>>();
      for (std::size_t e = 0; e < builder.ensemble_size; ++e) {
        TrainConfig c = config;
        c.seed = derive_seed(part_seed, e);
        ensembles->push_back(build_fitted_ensemble(part_data, spec, c));
      }
      models.part_models.push_back(
          [ensembles](const Matrix& x) { return aggregate_ensembles(*ensembles, x); });
    }
  }
  return scl_accuracy(models, test_set.features(), test_set.labels());
}

}  // namespace fitted

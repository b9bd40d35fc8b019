#include <gtest/gtest.h>

#include "fitted/datasets.hpp"
#include "fitted/errors.hpp"
#include "fitted/scl_eval.hpp"

using namespace fitted;
using V = std::vector<double>;

TEST(SclPartition, Validation) {
  const SclPartition p({{2, 3}, {0, 1}}, 4);
  EXPECT_EQ(p.parts(), (std::vector<Block>{{0, 1}, {2, 3}}));
  EXPECT_EQ(p.part_of(3), 1u);
  EXPECT_EQ(p.local_index(3), 1u);
  EXPECT_THROW(SclPartition({{0}, {1, 2, 3}}, 4), InfeasibleConstraintError);
  EXPECT_THROW(SclPartition({{0, 1}, {1, 2, 3}}, 4), OverlapError);
  EXPECT_THROW(SclPartition({{0, 1}}, 4), CoverageError);
}

TEST(ConcatScores, Examples) {
  const SclPartition whole({{0, 1}}, 2);
  EXPECT_EQ(concat_scores(std::vector<V>{{0.2, 0.8}}, whole), (V{0.2, 0.8}));
  const SclPartition split({{0, 1}, {2, 3}}, 4);
  EXPECT_EQ(concat_scores(std::vector<V>{{0.6, 0.4}, {0.8, 0.2}}, split), (V{0.3, 0.2, 0.4, 0.1}));
  const SclPartition interleaved({{0, 2}, {1, 3}}, 4);
  // The total is accumulated in global class order, so allow one ulp of drift.
  const V merged = concat_scores(std::vector<V>{{0.6, 0.4}, {0.8, 0.2}}, interleaved);
  const V expected{0.3, 0.4, 0.2, 0.1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(merged[i], expected[i], 1e-15);
}

TEST(ConcatScores, Errors) {
  const SclPartition split({{0, 1}, {2, 3}}, 4);
  EXPECT_THROW(concat_scores(std::vector<V>{{0.6, 0.4}}, split), ArityMismatchError);
  EXPECT_THROW(concat_scores(std::vector<V>{{0.6, 0.4}, {0.8, 0.1, 0.1}}, split), ArityMismatchError);
  EXPECT_THROW(concat_scores(std::vector<V>{{0.6, 0.6}, {0.8, 0.2}}, split), OutOfRangeError);
  EXPECT_NO_THROW(concat_scores(std::vector<V>{{0.6, 0.6}, {0.8, 0.2}}, split, false));
}

namespace {

PartScorer constant(V row) {
  return [row](const Matrix& x) {
    Matrix m(x.rows(), row.size());
    for (std::size_t r = 0; r < x.rows(); ++r) std::copy(row.begin(), row.end(), m.row(r).begin());
    return m;
  };
}

}  // namespace

TEST(SclAccuracy, GapExample) {
  // True class 2; part {0,1} is confidently wrong so the merged argmax is 0.
  const SclModelSet models{SclPartition({{0, 1}, {2, 3}}, 4),
                           {constant({0.9, 0.1}), constant({0.6, 0.4})}};
  const Matrix x(1, 1);
  const std::vector<ClassIndex> y{2};
  const auto r = scl_accuracy(models, x, y);
  EXPECT_EQ(r.scl_accuracy, 0.0);
  EXPECT_EQ(r.routed_accuracy_bound, 1.0);
  EXPECT_EQ(r.gap, 1.0);
  EXPECT_EQ(r.per_part_accuracy[1], std::optional<double>(1.0));
  EXPECT_FALSE(r.per_part_accuracy[0].has_value());
}

TEST(SclAccuracy, PerfectParts) {
  // Each example's true class carries all of its part's mass.
  const SclPartition p({{0, 1}, {2, 3}}, 4);
  const SclModelSet models{p,
                           {[](const Matrix& x) {
                              Matrix m(x.rows(), 2);
                              for (std::size_t r = 0; r < x.rows(); ++r) {
                                m(r, 0) = x(r, 0) == 0 ? 1.0 : (x(r, 0) == 1 ? 0.0 : 0.5);
                                m(r, 1) = 1 - m(r, 0);
                              }
                              return m;
                            },
                            [](const Matrix& x) {
                              Matrix m(x.rows(), 2);
                              for (std::size_t r = 0; r < x.rows(); ++r) {
                                m(r, 0) = x(r, 0) == 2 ? 1.0 : (x(r, 0) == 3 ? 0.0 : 0.5);
                                m(r, 1) = 1 - m(r, 0);
                              }
                              return m;
                            }}};
  const Matrix x = Matrix::from_rows({{0}, {1}, {2}, {3}});
  const std::vector<ClassIndex> y{0, 1, 2, 3};
  const auto r = scl_accuracy(models, x, y);
  EXPECT_EQ(r.scl_accuracy, 1.0);
  EXPECT_EQ(r.routed_accuracy_bound, 1.0);
}

TEST(SclAccuracy, SeparableRiskWithIndicator) {
  const SclModelSet models{SclPartition({{0, 1}, {2, 3}}, 4),
                           {constant({0.9, 0.1}), constant({0.6, 0.4})}};
  const Matrix x(2, 1);
  const std::vector<ClassIndex> y{0, 2};
  EXPECT_EQ(separable_risk(models, x, y, correct_indicator), 0.5);
  EXPECT_EQ(scl_accuracy_only(models, x, y), 0.5);
  EXPECT_EQ(routed_accuracy_bound(models, x, y), 1.0);
}

TEST(SamplePartitions, Shapes) {
  for (const auto& p : sample_partitions(4, 30, 2, 1, 1)) {
    if (p.num_parts() == 2) {
      EXPECT_EQ(p.part(0).size(), 2u);
    } else {
      EXPECT_EQ(p.num_parts(), 1u);
    }
  }
  for (const auto& p : sample_partitions(11, 50, 3, 2)) {
    EXPECT_GE(p.num_parts(), 2u);
    for (const auto& part : p.parts()) EXPECT_GE(part.size(), 3u);
  }
  EXPECT_EQ(sample_partitions(10, 20, 2, 3), sample_partitions(10, 20, 2, 3));
  EXPECT_THROW(sample_partitions(3, 1, 2, 0, 2), InfeasibleConstraintError);
  EXPECT_THROW(sample_partitions(6, 1, 1, 0), InfeasibleConstraintError);
}

TEST(HalvesPartition, TenClasses) {
  EXPECT_EQ(halves_partition(10).parts(), (std::vector<Block>{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}}));
}

class SclExperiment : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec s;
    s.num_classes = 10;
    s.dims = 4;
    s.per_class_count = 40;
    s.noise_sigma = 0.3;
    s.seed = 6;
    std::tie(train_set, test_set) = train_test_split(gen_gaussian_blobs(s), 0.3, 2);
    cfg.epochs = 10;
    cfg.seed = 5;
  }
  LabeledDataset train_set{Matrix(0, 1), {}, 2}, test_set{Matrix(0, 1), {}, 2};
  TrainConfig cfg;
};

TEST_F(SclExperiment, BoundHoldsForBothBuilders) {
  SclBuilder plain;
  SclBuilder fitted{SclBuilderKind::kFitted, std::nullopt, 1};
  for (const auto& b : {plain, fitted}) {
    const auto r = run_scl_experiment(train_set, test_set, halves_partition(10), b, cfg);
    EXPECT_LE(r.scl_accuracy, r.routed_accuracy_bound);
    EXPECT_EQ(r.gap, r.routed_accuracy_bound - r.scl_accuracy);
  }
}

TEST_F(SclExperiment, ExplicitPartSpaces) {
  SclBuilder b{SclBuilderKind::kFitted,
               FittedEnsembleSpec(ClassSet(5),
                                  {Sequel({explicit_space({{0}, {1}, {2}, {3, 4}}, 5),
                                           explicit_space({{0, 1}, {2}, {3}, {4}}, 5),
                                           explicit_space({{0}, {1, 2}, {3}, {4}}, 5)})},
                                  true),
               2};
  const auto r = run_scl_experiment(train_set, test_set, halves_partition(10), b, cfg);
  EXPECT_LE(r.scl_accuracy, r.routed_accuracy_bound);
  const SclPartition uneven({{0, 1, 2, 3}, {4, 5, 6, 7, 8, 9}}, 10);
  EXPECT_THROW(run_scl_experiment(train_set, test_set, uneven, b, cfg), SpecMismatchError);
}

TEST_F(SclExperiment, EmptyPart) {
  const auto no_nine = split_by_classes(train_set, {0, 1, 2, 3, 4, 5, 6, 7, 8}, false);
  EXPECT_THROW(run_scl_experiment(no_nine, test_set, halves_partition(10), SclBuilder{}, cfg),
               EmptyPartDataError);
}

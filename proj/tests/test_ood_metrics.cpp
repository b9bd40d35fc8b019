#include <gtest/gtest.h>

#include <random>

#include "fitted/errors.hpp"
#include "fitted/ood_metrics.hpp"
#include "oracles.hpp"

using namespace fitted;
using V = std::vector<double>;

TEST(FprAtTpr, Examples) {
  EXPECT_EQ(fpr_at_tpr(V{0.9, 0.9, 0.9, 0.9}, V{0.1, 0.1}), 0.0);
  V same(100);
  for (std::size_t i = 0; i < 100; ++i) same[i] = (i + 1) / 101.0;
  EXPECT_EQ(fpr_at_tpr(same, same), 0.95);
  EXPECT_EQ(fpr_at_tpr(V{0.5}, V{0.5}), 1.0);
}

TEST(FprAtTpr, Errors) {
  EXPECT_THROW(fpr_at_tpr(V{}, V{0.1}), EmptyInputError);
  EXPECT_THROW(fpr_at_tpr(V{0.1}, V{0.1}, 0.0), OutOfRangeError);
  EXPECT_THROW(fpr_at_tpr(V{0.1}, V{0.1}, 1.5), OutOfRangeError);
}

TEST(Auroc, Examples) {
  EXPECT_EQ(auroc(V{0.9, 0.8}, V{0.1, 0.2}), 1.0);
  EXPECT_EQ(auroc(V{0.3, 0.7, 0.7}, V{0.7, 0.3, 0.7}), 0.5);
  EXPECT_EQ(auroc(V{0.9, 0.4}, V{0.5}), 0.5);
}

TEST(DetectionError, Examples) {
  EXPECT_EQ(detection_error(V{0.9, 0.8}, V{0.1, 0.2}), 0.0);
  EXPECT_EQ(detection_error(V{0.2, 0.6}, V{0.6, 0.2}), 0.5);
  EXPECT_EQ(detection_error(V{0.9, 0.1}, V{0.5}), 0.25);
}

namespace {

V draw(std::mt19937_64& rng, std::size_t n, bool ties) {
  V v(n);
  if (ties) {
    std::uniform_int_distribution<int> k(0, 5);
    for (auto& x : v) x = k(rng) / 5.0;
  } else {
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& x : v) x = u(rng);
  }
  return v;
}

}  // namespace

TEST(Metrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 200; ++t) {
    const bool ties = t % 2 == 0;
    const V in = draw(rng, 1 + rng() % 200, ties);
    const V out = draw(rng, 1 + rng() % 200, ties);
    EXPECT_EQ(fpr_at_tpr(in, out), oracle::fpr_at_tpr(in, out)) << t;
    EXPECT_EQ(auroc(in, out), oracle::auroc(in, out)) << t;
    EXPECT_EQ(detection_error(in, out), oracle::detection_error(in, out)) << t;
    EXPECT_EQ(auroc(in, out) + auroc(out, in), 1.0) << t;
  }
}

TEST(Histogram, Placement) {
  EXPECT_EQ(confidence_histogram(V{}, 4), (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_EQ(confidence_histogram(V{0.0, 1.0}, 2), (std::vector<std::size_t>{1, 1}));
  const auto h = confidence_histogram(V{0.049, 0.051}, 20);
  EXPECT_EQ(h[0], 1u);
  EXPECT_EQ(h[1], 1u);
  EXPECT_THROW(confidence_histogram(V{1.2}, 20), OutOfRangeError);
  EXPECT_THROW(confidence_histogram(V{0.5}, 0), OutOfRangeError);
}

TEST(ConfidenceStats, Groups) {
  const std::vector<ConfidenceSample> all_right{{0.8, true, true}, {0.8, true, true}};
  const auto a = confidence_stats(all_right);
  EXPECT_EQ(a.correct->mean, 0.8);
  EXPECT_FALSE(a.miss.has_value());
  EXPECT_EQ(*a.accuracy, 1.0);

  const std::vector<ConfidenceSample> mixed{{0.9, true, true}, {0.3, true, false}, {0.2, false, {}}};
  const auto b = confidence_stats(mixed);
  EXPECT_EQ(b.correct->mean, 0.9);
  EXPECT_EQ(b.miss->mean, 0.3);
  EXPECT_DOUBLE_EQ(b.total->mean, 0.6);
  EXPECT_EQ(*b.accuracy, 0.5);

  const std::vector<ConfidenceSample> unlabeled{{0.4, true, {}}};
  EXPECT_FALSE(confidence_stats(unlabeled).accuracy.has_value());
  const std::vector<ConfidenceSample> only_out{{0.4, false, {}}};
  EXPECT_THROW(confidence_stats(only_out), EmptyInputError);
}

TEST(MeanStd, Population) {
  const auto s = mean_std(V{1, 3});
  EXPECT_EQ(s->mean, 2.0);
  EXPECT_EQ(s->stddev, 1.0);
  EXPECT_FALSE(mean_std(V{}).has_value());
}

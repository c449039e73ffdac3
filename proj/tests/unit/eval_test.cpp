#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "semenet/error.hpp"
#include "semenet/eval/kmeans.hpp"
#include "semenet/eval/metrics.hpp"
#include "semenet/eval/report.hpp"
#include "semenet/eval/roc.hpp"
#include "semenet/rng.hpp"

using namespace semenet;

TEST(Confusion, HandCountsAndErrors) {
  const std::vector<int> p{0, 0, 1}, t{0, 1, 1};
  const ConfusionMatrix cm = confusion(p, t, 2);
  EXPECT_EQ(cm.counts, (std::vector<std::uint64_t>{1, 0, 1, 1}));
  const ConfusionMatrix diag = confusion(t, t, 2);
  EXPECT_EQ(diag.counts, (std::vector<std::uint64_t>{1, 0, 0, 2}));
  const std::vector<int> bad{0, 2, 1};
  EXPECT_THROW(confusion(bad, t, 2), InvalidInputError);
  const std::vector<int> short_p{0};
  EXPECT_THROW(confusion(short_p, t, 2), InvalidInputError);
}

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(3);
  std::vector<int> p(1000), t(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    p[i] = static_cast<int>(uniform_index(rng, 4));
    t[i] = static_cast<int>(uniform_index(rng, 4));
  }
  const ConfusionMatrix cm = confusion(p, t, 4);
  EXPECT_EQ(cm.total(), 1000u);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      std::uint64_t n = 0;
      for (std::size_t i = 0; i < 1000; ++i) n += t[i] == a && p[i] == b;
      EXPECT_EQ(cm.at(a, b), n);
    }
}

TEST(Metrics, AccuracyAndF1) {
  const std::vector<int> p{0, 0, 1}, t{0, 1, 1};
  const ConfusionMatrix cm = confusion(p, t, 2);
  EXPECT_DOUBLE_EQ(accuracy(cm), 2.0 / 3.0);
  const F1Scores f1 = f1_scores(cm);
  EXPECT_DOUBLE_EQ(f1.per_class[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1.per_class[1], 2.0 / 3.0);

  const ConfusionMatrix perfect = confusion(t, t, 2);
  EXPECT_EQ(accuracy(perfect), 1.0);
  EXPECT_EQ(f1_scores(perfect).macro, 1.0);

  // Class 2 never predicted and never true: F1 0, excluded from the mean.
  const ConfusionMatrix absent = confusion(t, t, 3);
  const F1Scores fa = f1_scores(absent);
  EXPECT_EQ(fa.per_class[2], 0.0);
  EXPECT_FALSE(fa.counted[2]);
  EXPECT_EQ(fa.macro, 1.0);

  // Class 1 is true but never predicted: contributes 0.
  const std::vector<int> all0{0, 0, 0};
  const F1Scores fz = f1_scores(confusion(all0, t, 2));
  EXPECT_EQ(fz.per_class[1], 0.0);
  EXPECT_TRUE(fz.counted[1]);
  EXPECT_THROW(accuracy(confusion({}, {}, 2)), UndefinedMetricError);
}

TEST(Metrics, AccuracyInvariantUnderRelabeling) {
  Rng rng(8);
  std::vector<int> p(200), t(200);
  for (std::size_t i = 0; i < 200; ++i) {
    t[i] = static_cast<int>(uniform_index(rng, 3));
    p[i] = uniform01(rng) < 0.7 ? t[i] : static_cast<int>(uniform_index(rng, 3));
  }
  const int perm[3] = {2, 0, 1};
  std::vector<int> pp(200), tp(200);
  for (std::size_t i = 0; i < 200; ++i) {
    pp[i] = perm[p[i]];
    tp[i] = perm[t[i]];
  }
  EXPECT_DOUBLE_EQ(accuracy(confusion(p, t, 3)), accuracy(confusion(pp, tp, 3)));
}

TEST(Roc, HandExamples) {
  const std::vector<double> sep{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> sep_t{1, 1, 0, 0};
  EXPECT_EQ(roc_auc(sep, sep_t).auc, 1.0);
  const std::vector<double> flat(6, 0.3);
  const std::vector<int> flat_t{1, 0, 1, 0, 0, 1};
  EXPECT_EQ(roc_auc(flat, flat_t).auc, 0.5);
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<int> tr{1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, tr).auc, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(auc_pair_count(s, tr), 2.0 / 3.0);
  const std::vector<int> one{1, 1, 1, 1};
  EXPECT_THROW(roc_auc(s, one), UndefinedMetricError);
}

TEST(Roc, TrapezoidEqualsPairCountingExactly) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 199);
    std::vector<double> scores(n);
    std::vector<int> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(uniform_index(rng, 12)) / 11.0;  // frequent ties
      truths[i] = static_cast<int>(uniform_index(rng, 2));
    }
    truths[0] = 0;
    truths[1] = 1;
    const RocCurve c = roc_auc(scores, truths);
    EXPECT_EQ(c.auc, auc_pair_count(scores, truths));
    ASSERT_GE(c.points.size(), 2u);
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_EQ(c.points.back().fpr, 1.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    }
  }
}

TEST(Roc, MacroOneVsRest) {
  const std::vector<int> t{0, 1, 2, 0, 1, 2};
  Tensor<double> onehot({6, 3});
  for (std::size_t i = 0; i < 6; ++i) onehot[i * 3 + static_cast<std::size_t>(t[i])] = 1.0;
  EXPECT_EQ(macro_ovr_auc(onehot, t).macro, 1.0);
  const OvrAuc uni = macro_ovr_auc(Tensor<double>({6, 3}, 1.0 / 3.0), t);
  for (double a : uni.per_class) EXPECT_EQ(a, 0.5);

  Rng rng(4);
  const std::size_t n = 90;
  Tensor<double> probs({n, 3});
  std::vector<int> truths(n);
  for (std::size_t i = 0; i < n; ++i) {
    truths[i] = static_cast<int>(i % 3);
    double sum = 0;
    for (std::size_t c = 0; c < 3; ++c) sum += probs[i * 3 + c] = uniform01(rng);
    for (std::size_t c = 0; c < 3; ++c) probs[i * 3 + c] /= sum;
  }
  const OvrAuc ovr = macro_ovr_auc(probs, truths);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = probs[i * 3 + static_cast<std::size_t>(c)];
    EXPECT_EQ(ovr.per_class[static_cast<std::size_t>(c)], roc_auc(col, truths, c).auc);
  }
  const std::vector<int> missing{0, 1, 0, 1, 0, 1};
  try {
    macro_ovr_auc(onehot, missing);
    FAIL();
  } catch (const UndefinedMetricError& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos);
  }
}

TEST(Iou, SetArithmetic) {
  MaskImage a(4, 4, 0), b(4, 4, 0);
  EXPECT_EQ(mean_iou(a, a), 1.0);
  EXPECT_EQ(mean_iou(MaskImage(4, 4, 1), MaskImage(4, 4, 0)), 0.0);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) {
      a.at(x, y) = x < 2;  // truth: left half
      b.at(x, y) = y < 2;  // pred: top half
    }
  EXPECT_DOUBLE_EQ(mean_iou(b, a), 1.0 / 3.0);
  EXPECT_THROW(mean_iou(a, MaskImage(3, 4, 0)), InvalidInputError);
}

TEST(KMeans, TrivialCases) {
  const std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {4, 6}, {2, 0}};
  const KMeansResult one = kmeans(pts, {.k = 1, .seed = 1});
  EXPECT_DOUBLE_EQ(one.centroids[0][0], 2.0);
  EXPECT_DOUBLE_EQ(one.centroids[0][1], 1.5);
  for (auto a : one.assignment) EXPECT_EQ(a, 0u);
  const KMeansResult three = kmeans(pts, {.k = 3, .seed = 2});
  EXPECT_EQ(three.assignment[1], three.assignment[3]);
  EXPECT_THROW(kmeans(pts, {.k = 5}), InvalidInputError);
}

TEST(KMeans, SeparatedBlobsAndMonotoneObjective) {
  Rng rng(9);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  std::vector<int> blob;
  for (int i = 0; i < 400; ++i) {
    const int b = i % 2;
    pts.push_back({b * 10.0 + noise(rng), b * -8.0 + noise(rng), noise(rng)});
    blob.push_back(b);
  }
  for (auto init : {KMeansInit::plus_plus, KMeansInit::random}) {
    const KMeansResult r = kmeans(pts, {.k = 2, .seed = 4, .max_iter = 100, .init = init});
    EXPECT_TRUE(r.converged);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) agree += r.assignment[i] == r.assignment[0] ? blob[i] == blob[0] : blob[i] != blob[0];
    EXPECT_GE(agree, 396u);
    for (std::size_t i = 1; i < r.objective.size(); ++i) EXPECT_LE(r.objective[i], r.objective[i - 1] * (1 + 1e-12));
    const KMeansResult again = kmeans(pts, {.k = 2, .seed = 4, .max_iter = 100, .init = init});
    EXPECT_EQ(again.assignment, r.assignment);
  }
}

TEST(Report, JsonAndCsvExports) {
  const std::vector<int> t{0, 1, 2, 0, 1, 2};
  Tensor<double> probs({6, 3}, 0.1);
  for (std::size_t i = 0; i < 6; ++i) probs[i * 3 + static_cast<std::size_t>(t[i])] = 0.8;
  probs[0 * 3 + 1] = 0.85;  // one mistake
  const MetricsReport r = evaluate(probs, t, {"normal", "bacterial", "viral"});
  EXPECT_DOUBLE_EQ(r.accuracy, 5.0 / 6.0);
  const auto doc = to_json(r);
  EXPECT_EQ(doc["samples"], 6);
  EXPECT_EQ(doc["classes"][2]["name"], "viral");
  EXPECT_EQ(doc["confusion"][0][1], 1);

  const auto dir = std::filesystem::temp_directory_path();
  write_confusion_csv(dir / "semenet_cm.csv", r.confusion);
  std::ifstream cm(dir / "semenet_cm.csv");
  std::string header, row;
  std::getline(cm, header);
  std::getline(cm, row);
  EXPECT_EQ(header, "truth\\pred,normal,bacterial,viral");
  EXPECT_EQ(row, "normal,1,1,0");
  write_roc_csv(dir / "semenet_roc.csv", *r.auc, r.confusion.names);
  std::ifstream roc(dir / "semenet_roc.csv");
  std::getline(roc, header);
  EXPECT_EQ(header, "class,threshold,fpr,tpr");

  const std::vector<int> two{0, 1, 0, 1, 0, 1};
  const MetricsReport partial = evaluate(probs, two);
  EXPECT_FALSE(partial.auc.has_value());
  EXPECT_TRUE(to_json(partial)["macro_auc"].is_null());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "vandet/eval.hpp"
#include "vandet/rng.hpp"

using namespace vandet;

namespace {

PredictionSet random_preds(Rng& rng, int max_n, bool with_ties = true) {
  const int n = 2 + static_cast<int>(rng.uniform_below(max_n - 1));
  PredictionSet ps;
  for (int i = 0; i < n; ++i) {
    ps.probs.push_back(with_ties && rng.bernoulli(0.3)
                           ? rng.uniform_below(5) / 4.0
                           : rng.uniform01());
    ps.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return ps;
}

PredictionSet random_two_class(Rng& rng, int max_n) {
  for (;;) {
    PredictionSet ps = random_preds(rng, max_n);
    const long pos = std::count(ps.labels.begin(), ps.labels.end(), 1);
    if (pos > 0 && pos < static_cast<long>(ps.labels.size())) return ps;
  }
}

double auc_pairwise(const PredictionSet& ps) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps.labels[i] != 1) continue;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (ps.labels[j] != 0) continue;
      ++pairs;
      if (ps.probs[i] > ps.probs[j]) {
        wins += 1;
      } else if (ps.probs[i] == ps.probs[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

}  // namespace

TEST_CASE("rmse of perfect predictions is zero") {
  CHECK(rmse({{1.0, 0.0, 1.0}, {1, 0, 1}}) == 0.0);
}

TEST_CASE("rmse of a constant zero prediction is the root positive rate") {
  PredictionSet ps;
  for (int i = 0; i < 10000; ++i) {
    ps.probs.push_back(0.0);
    ps.labels.push_back(i < 4335 ? 1 : 0);
  }
  CHECK(rmse(ps) == doctest::Approx(std::sqrt(0.4335)).epsilon(1e-12));
}

TEST_CASE("rmse matches a direct recomputation") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const PredictionSet ps = random_preds(rng, 40);
    double sum = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      sum += (ps.probs[i] - ps.labels[i]) * (ps.probs[i] - ps.labels[i]);
    }
    CHECK(rmse(ps) ==
          doctest::Approx(std::sqrt(sum / ps.size())).epsilon(1e-12));
  }
}

TEST_CASE("prediction sets are validated") {
  CHECK_THROWS(validate({{}, {}}));                 // empty
  CHECK_THROWS(validate({{0.5}, {1, 0}}));          // length mismatch
  CHECK_THROWS(validate({{1.5}, {1}}));             // prob out of range
  CHECK_THROWS(validate({{0.5}, {2}}));             // bad label
  CHECK_NOTHROW(validate({{0.0, 1.0}, {0, 1}}));
}

TEST_CASE("accuracy at the extremes collapses to class rates") {
  const PredictionSet ps = {{0.2, 0.7, 0.9, 0.4}, {0, 1, 1, 0}};
  CHECK(accuracy_at(ps, 1.0) == 0.5);  // nothing positive: negative rate
  CHECK(accuracy_at(ps, 0.0) == 0.5);  // everything positive: positive rate
  CHECK(accuracy_at(ps, 0.5) == 1.0);
}

TEST_CASE("accuracy matches a direct recount") {
  Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const PredictionSet ps = random_preds(rng, 60);
    const double threshold = rng.uniform01();
    long correct = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      correct += (ps.probs[i] > threshold) == (ps.labels[i] == 1);
    }
    CHECK(accuracy_at(ps, threshold) ==
          doctest::Approx(static_cast<double>(correct) / ps.size()));
  }
}

TEST_CASE("the best threshold separates separated classes") {
  const PredictionSet ps = {{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}};
  const ThresholdAccuracy best = best_accuracy_threshold(ps);
  CHECK(best.accuracy == 1.0);
  CHECK(best.threshold == 0.5);  // midpoint of the separating gap
}

TEST_CASE("an all-positive set pushes the threshold to zero") {
  const PredictionSet ps = {{0.3, 0.6, 0.9}, {1, 1, 1}};
  const ThresholdAccuracy best = best_accuracy_threshold(ps);
  CHECK(best.threshold == 0.0);
  CHECK(best.accuracy == 1.0);
}

TEST_CASE("threshold ties resolve to the larger candidate") {
  // Accuracy 0.5 at both extremes, 0 in the middle.
  const PredictionSet ps = {{0.3, 0.7}, {1, 0}};
  const ThresholdAccuracy best = best_accuracy_threshold(ps);
  CHECK(best.accuracy == 0.5);
  CHECK(best.threshold == 1.0);
}

TEST_CASE("the best threshold dominates a dense grid scan") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const PredictionSet ps = random_preds(rng, 50);
    const ThresholdAccuracy best = best_accuracy_threshold(ps);
    CHECK(best.accuracy == doctest::Approx(accuracy_at(ps, best.threshold)));
    double grid_best = 0;
    for (int g = 0; g <= 10000; ++g) {
      grid_best = std::max(grid_best, accuracy_at(ps, g / 10000.0));
    }
    CHECK(best.accuracy >= grid_best - 1e-12);
  }
}

TEST_CASE("mcnemar reflects the disagreement counts") {
  const std::vector<bool> same = {true, false, true, true};
  CHECK(mcnemar_chi2(same, same) == 0.0);

  // a correct 10 times where b is wrong, never the reverse: (10-1)^2/10.
  std::vector<bool> a(10, true), b(10, false);
  CHECK(mcnemar_chi2(a, b) == doctest::Approx(8.1).epsilon(1e-12));

  // 5 disagreements each way: (0-1)^2/10.
  std::vector<bool> c = {true, true, true, true, true,
                         false, false, false, false, false};
  std::vector<bool> d = {false, false, false, false, false,
                         true, true, true, true, true};
  CHECK(mcnemar_chi2(c, d) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mcnemar is symmetric") {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_below(50));
    std::vector<bool> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(rng.bernoulli(0.7));
      b.push_back(rng.bernoulli(0.6));
    }
    CHECK(mcnemar_chi2(a, b) == mcnemar_chi2(b, a));
  }
}

TEST_CASE("roc for a perfect ranking passes through the corner") {
  const PredictionSet ps = {{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}};
  const auto points = roc_points(ps);
  REQUIRE(points.size() >= 3);
  CHECK(points.front().fpr == 0.0);
  CHECK(points.front().tpr == 0.0);
  CHECK(points.back().fpr == 1.0);
  CHECK(points.back().tpr == 1.0);
  const bool corner =
      std::any_of(points.begin(), points.end(), [](const RocPoint& p) {
        return p.fpr == 0.0 && p.tpr == 1.0;
      });
  CHECK(corner);
  CHECK(auc_roc(ps) == 1.0);
}

TEST_CASE("identical probabilities give the diagonal") {
  const PredictionSet ps = {{0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}};
  const auto points = roc_points(ps);
  REQUIRE(points.size() == 2);
  CHECK(points[1].fpr == 1.0);
  CHECK(points[1].tpr == 1.0);
  CHECK(auc_roc(ps) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("roc requires both classes") {
  CHECK_THROWS(roc_points({{0.1, 0.9}, {1, 1}}));
  CHECK_THROWS(auc_roc({{0.1, 0.9}, {0, 0}}));
}

TEST_CASE("roc points match confusion-matrix recounts") {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const PredictionSet ps = random_two_class(rng, 30);
    const long pos = std::count(ps.labels.begin(), ps.labels.end(), 1);
    const long neg = static_cast<long>(ps.size()) - pos;
    for (const RocPoint& p : roc_points(ps)) {
      // Each curve point must be realizable by some threshold.
      bool realizable = false;
      std::vector<double> candidates = ps.probs;
      candidates.push_back(1.0);   // classifies nothing positive: (0, 0)
      candidates.push_back(-1.0);  // classifies everything positive: (1, 1)
      for (double t : candidates) {
        const ConfusionMatrix cm = confusion_at(ps, t);
        if (static_cast<double>(cm.fp) / neg == p.fpr &&
            static_cast<double>(cm.tp) / pos == p.tpr) {
          realizable = true;
          break;
        }
      }
      CHECK(realizable);
    }
  }
}

TEST_CASE("the two auc computations agree and match brute force") {
  Rng rng(26);
  for (int trial = 0; trial < 300; ++trial) {
    const PredictionSet ps = random_two_class(rng, 20);
    // auc_roc internally cross-checks the trapezoid against the rank
    // statistic and throws on disagreement, so calling it is the dual test.
    const double auc = auc_roc(ps);
    CHECK(auc == doctest::Approx(auc_pairwise(ps)).epsilon(1e-12));
  }
}

TEST_CASE("pr curve of a perfect ranking has unit area") {
  const PredictionSet ps = {{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}};
  CHECK(auc_pr(ps) == doctest::Approx(1.0).epsilon(1e-12));
  const auto points = pr_points(ps);
  CHECK(points.back().recall == 1.0);
}

TEST_CASE("pr area of random scores approaches the positive rate") {
  Rng rng(27);
  PredictionSet ps;
  for (int i = 0; i < 20000; ++i) {
    ps.probs.push_back(rng.uniform01());
    ps.labels.push_back(rng.bernoulli(0.35) ? 1 : 0);
  }
  const double rate =
      std::count(ps.labels.begin(), ps.labels.end(), 1) /
      static_cast<double>(ps.size());
  CHECK(std::abs(auc_pr(ps) - rate) < 0.05);
}

TEST_CASE("pr requires at least one positive") {
  CHECK_THROWS(pr_points({{0.2, 0.4}, {0, 0}}));
  CHECK_THROWS(auc_pr({{0.2, 0.4}, {0, 0}}));
}

TEST_CASE("pr area matches dense numerical integration") {
  Rng rng(28);
  for (int trial = 0; trial < 40; ++trial) {
    const PredictionSet ps = random_two_class(rng, 10);
    const long pos = std::count(ps.labels.begin(), ps.labels.end(), 1);

    // Collect the achievable (tp, fp) staircase in descending-threshold
    // order, then integrate precision over recall with tp interpolated
    // linearly (and fp linearly in tp) between adjacent corners.
    std::vector<std::pair<double, double>> corners = {{0.0, 0.0}};
    std::vector<double> thresholds = ps.probs;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    for (double t : thresholds) {
      // prob >= t counts as predicted positive, realized by the strict rule
      // at a threshold nudged just below t.
      double tp = 0, fp = 0;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps.probs[i] >= t) (ps.labels[i] ? tp : fp) += 1;
      }
      if (std::make_pair(tp, fp) != corners.back()) {
        corners.push_back({tp, fp});
      }
    }

    double area = 0;
    for (std::size_t k = 0; k + 1 < corners.size(); ++k) {
      const auto [tp_a, fp_a] = corners[k];
      const auto [tp_b, fp_b] = corners[k + 1];
      if (tp_b == tp_a) continue;  // recall does not move
      const double slope = (fp_b - fp_a) / (tp_b - tp_a);
      const int steps = 20000;
      double prev_recall = tp_a / pos;
      double prev_precision =
          (tp_a + fp_a) > 0 ? tp_a / (tp_a + fp_a) : 1.0;
      for (int s = 1; s <= steps; ++s) {
        const double tp = tp_a + (tp_b - tp_a) * s / steps;
        const double fp = fp_a + slope * (tp - tp_a);
        const double recall = tp / pos;
        const double precision = tp / (tp + fp);
        area += (recall - prev_recall) * (precision + prev_precision) / 2;
        prev_recall = recall;
        prev_precision = precision;
      }
    }
    CHECK(auc_pr(ps) == doctest::Approx(area).epsilon(1e-3));
  }
}

TEST_CASE("reliability bins report means and positive fractions") {
  PredictionSet ps;
  for (int i = 0; i < 20; ++i) {
    ps.probs.push_back(0.05);
    ps.labels.push_back(0);
  }
  const auto bins = reliability_bins(ps);
  REQUIRE(bins.size() == 10);
  CHECK(bins[0].count == 20);
  REQUIRE(bins[0].mean_pred.has_value());
  CHECK(*bins[0].mean_pred == doctest::Approx(0.05));
  CHECK(*bins[0].frac_pos == 0.0);
  for (int b = 1; b < 10; ++b) {
    CHECK(bins[b].count == 0);
    CHECK_FALSE(bins[b].mean_pred.has_value());
    CHECK_FALSE(bins[b].frac_pos.has_value());
  }
}

TEST_CASE("bin edges follow the documented half-open convention") {
  // 0.1 belongs to the second bin; 1.0 belongs to the last.
  const PredictionSet ps = {{0.0, 0.1, 0.999, 1.0}, {0, 0, 1, 1}};
  const auto bins = reliability_bins(ps);
  CHECK(bins[0].count == 1);
  CHECK(bins[1].count == 1);
  CHECK(bins[9].count == 2);
}

TEST_CASE("uniformly spread predictions fill every bin") {
  PredictionSet ps;
  for (int b = 0; b < 10; ++b) {
    for (int k = 0; k < 3; ++k) {
      ps.probs.push_back(b / 10.0 + 0.05);
      ps.labels.push_back(k % 2);
    }
  }
  const auto bins = reliability_bins(ps);
  for (const auto& bin : bins) CHECK(bin.count == 3);
}

TEST_CASE("reliability distance is the mean over populated bins") {
  PredictionSet ps = {{0.05, 0.95}, {0, 1}};
  const auto bins = reliability_bins(ps);
  // Bin 0: |0.05 - 0| = 0.05; bin 9: |0.95 - 1| = 0.05.
  CHECK(reliability_mad(bins) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("well-calibrated samples sit near the diagonal") {
  Rng rng(29);
  PredictionSet ps;
  for (int i = 0; i < 50000; ++i) {
    const double p = rng.uniform01();
    ps.probs.push_back(p);
    ps.labels.push_back(rng.bernoulli(p) ? 1 : 0);
  }
  CHECK(reliability_mad(reliability_bins(ps)) < 0.02);
}

TEST_CASE("cost-optimal threshold formula") {
  CHECK(theoretical_threshold({1.0, 4.0}) == 0.8);  // exact, not approximate
  CHECK(theoretical_threshold({2.0, 2.0000001}) ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(theoretical_threshold({1.0, 49.0}) == doctest::Approx(0.98));
  CHECK_THROWS(theoretical_threshold({1.0, 1.0}));   // needs c10 > c01
  CHECK_THROWS(theoretical_threshold({0.0, 4.0}));   // costs must be positive
  CHECK_THROWS(theoretical_threshold({4.0, 1.0}));
}

TEST_CASE("confusion counts respect the strict comparison") {
  const PredictionSet ps = {{0.2, 0.5, 0.8, 1.0}, {0, 1, 1, 1}};
  ConfusionMatrix cm = confusion_at(ps, 1.0);
  CHECK(cm.tp == 0);
  CHECK(cm.fp == 0);
  CHECK(cm.fn == 3);
  cm = confusion_at(ps, 0.0);
  CHECK(cm.tn == 0);
  CHECK(cm.fn == 0);
  CHECK(cm.tp == 3);
  CHECK(cm.fp == 1);
  cm = confusion_at(ps, 0.5);  // 0.5 itself is not over the threshold
  CHECK(cm.fn == 1);
  CHECK(cm.tp == 2);
  CHECK(cm.total() == 4);
}

TEST_CASE("confusion percentages sum to one hundred") {
  Rng rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    const PredictionSet ps = random_preds(rng, 40);
    const ConfusionMatrix cm = confusion_at(ps, rng.uniform01());
    CHECK(cm.tp_pct() + cm.fp_pct() + cm.tn_pct() + cm.fn_pct() ==
          doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("empirical threshold minimizes the total cost") {
  const CostMatrix costs{1.0, 4.0};
  const PredictionSet separable = {{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}};
  const ThresholdCost best = empirical_threshold(separable, costs);
  CHECK(best.cost == 0.0);

  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const PredictionSet ps = random_preds(rng, 50);
    const ThresholdCost emp = empirical_threshold(ps, costs);
    const double theory_cost =
        total_cost(confusion_at(ps, theoretical_threshold(costs)), costs);
    CHECK(emp.cost <= theory_cost);
    CHECK(emp.cost ==
          doctest::Approx(total_cost(confusion_at(ps, emp.threshold), costs)));
    // Dense grid dominance.
    double grid_best = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 2000; ++g) {
      grid_best = std::min(
          grid_best, total_cost(confusion_at(ps, g / 2000.0), costs));
    }
    CHECK(emp.cost <= grid_best + 1e-12);
  }
}

TEST_CASE("curve csv emitters write well-formed tables") {
  const PredictionSet ps = {{0.1, 0.4, 0.6, 0.9}, {0, 1, 0, 1}};
  std::ostringstream roc;
  write_roc_csv(roc, roc_points(ps));
  CHECK(roc.str().find("fpr,tpr\n") == 0);

  std::ostringstream pr;
  write_pr_csv(pr, pr_points(ps));
  CHECK(pr.str().find("recall,precision\n") == 0);

  std::ostringstream rel;
  write_reliability_csv(rel, reliability_bins(ps));
  const std::string rel_text = rel.str();
  CHECK(rel_text.find("bin,lo,hi,count,mean_pred,frac_pos\n") == 0);
  // 10 bins + header.
  CHECK(std::count(rel_text.begin(), rel_text.end(), '\n') == 11);
}

#include "vandet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "vandet/text.hpp"

namespace vandet {

void validate(const PredictionSet& preds) {
  if (preds.probs.size() != preds.labels.size()) {
    throw std::invalid_argument("probs and labels differ in length");
  }
  if (preds.probs.empty()) {
    throw std::invalid_argument("empty prediction set");
  }
  for (double p : preds.probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probability outside [0, 1]");
    }
  }
  for (int y : preds.labels) {
    if (y != 0 && y != 1) {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
}

double rmse(const PredictionSet& preds) {
  validate(preds);
  double sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds.probs[i] - preds.labels[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(preds.size()));
}

double accuracy_at(const PredictionSet& preds, double threshold) {
  validate(preds);
  long correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool positive = preds.probs[i] > threshold;
    if (positive == (preds.labels[i] == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

namespace {

// {0} + midpoints of adjacent distinct probabilities + {1}, ascending.
// Exactly one candidate per achievable classification of the rule p > t.
std::vector<double> candidate_thresholds(const std::vector<double>& probs) {
  std::vector<double> sorted = probs;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> candidates;
  candidates.push_back(0.0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double mid = 0.5 * (sorted[i] + sorted[i + 1]);
    if (mid > candidates.back() && mid < 1.0) candidates.push_back(mid);
  }
  candidates.push_back(1.0);
  return candidates;
}

}  // namespace

ThresholdAccuracy best_accuracy_threshold(const PredictionSet& preds) {
  validate(preds);
  ThresholdAccuracy best{0.0, -1.0};
  for (double t : candidate_thresholds(preds.probs)) {
    const double acc = accuracy_at(preds, t);
    if (acc >= best.accuracy) best = {t, acc};
  }
  return best;
}

double mcnemar_chi2(const std::vector<bool>& correct_a,
                    const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size()) {
    throw std::invalid_argument("classifier outcome lists differ in length");
  }
  long n01 = 0, n10 = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++n01;
    if (!correct_a[i] && correct_b[i]) ++n10;
  }
  if (n01 + n10 == 0) return 0.0;
  const double diff = std::abs(static_cast<double>(n01 - n10)) - 1.0;
  return diff * diff / static_cast<double>(n01 + n10);
}

namespace {

struct RankedCounts {
  // Cumulative (tp, fp) after including each distinct probability,
  // descending; plus class totals.
  std::vector<long> tp, fp;
  long pos = 0, neg = 0;
};

RankedCounts ranked_counts(const PredictionSet& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds.probs[a] > preds.probs[b];
  });
  RankedCounts rc;
  for (int y : preds.labels) (y == 1 ? rc.pos : rc.neg)++;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double p = preds.probs[order[i]];
    for (; i < order.size() && preds.probs[order[i]] == p; ++i) {
      (preds.labels[order[i]] == 1 ? tp : fp)++;
    }
    rc.tp.push_back(tp);
    rc.fp.push_back(fp);
  }
  return rc;
}

}  // namespace

std::vector<RocPoint> roc_points(const PredictionSet& preds) {
  validate(preds);
  const RankedCounts rc = ranked_counts(preds);
  if (rc.pos == 0 || rc.neg == 0) {
    throw std::invalid_argument("ROC needs both classes present");
  }
  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0});
  for (std::size_t k = 0; k < rc.tp.size(); ++k) {
    points.push_back({static_cast<double>(rc.fp[k]) / rc.neg,
                      static_cast<double>(rc.tp[k]) / rc.pos});
  }
  return points;
}

double auc_roc(const PredictionSet& preds) {
  const std::vector<RocPoint> points = roc_points(preds);
  double trapezoid = 0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    trapezoid += (points[k + 1].fpr - points[k].fpr) *
                 (points[k].tpr + points[k + 1].tpr) * 0.5;
  }

  // Mann-Whitney with midranks: U / (pos * neg).
  const RankedCounts rc = ranked_counts(preds);
  double u = 0;
  long prev_tp = 0, prev_fp = 0;
  for (std::size_t k = 0; k < rc.tp.size(); ++k) {
    const double d_tp = static_cast<double>(rc.tp[k] - prev_tp);
    const double d_fp = static_cast<double>(rc.fp[k] - prev_fp);
    // Positives in this tie group beat all lower-ranked negatives and tie
    // with this group's negatives.
    u += d_tp * (static_cast<double>(rc.neg - rc.fp[k]) + 0.5 * d_fp);
    prev_tp = rc.tp[k];
    prev_fp = rc.fp[k];
  }
  const double rank_form = u / (static_cast<double>(rc.pos) * rc.neg);

  if (std::abs(trapezoid - rank_form) > 1e-12) {
    throw std::logic_error("ROC area mismatch: trapezoid " +
                           format_g17(trapezoid) + " vs rank statistic " +
                           format_g17(rank_form));
  }
  return trapezoid;
}

std::vector<PrPoint> pr_points(const PredictionSet& preds) {
  validate(preds);
  const RankedCounts rc = ranked_counts(preds);
  if (rc.pos == 0) {
    throw std::invalid_argument("PR curve needs at least one positive");
  }
  std::vector<PrPoint> points;
  for (std::size_t k = 0; k < rc.tp.size(); ++k) {
    const double denom = static_cast<double>(rc.tp[k] + rc.fp[k]);
    points.push_back({static_cast<double>(rc.tp[k]) / rc.pos,
                      static_cast<double>(rc.tp[k]) / denom});
  }
  return points;
}

double auc_pr(const PredictionSet& preds) {
  validate(preds);
  const RankedCounts rc = ranked_counts(preds);
  if (rc.pos == 0) {
    throw std::invalid_argument("PR area needs at least one positive");
  }
  // Between adjacent achievable points, interpolate (tp, fp) linearly in tp
  // and integrate precision d(recall) in closed form:
  //   integral of u/(m*u + c) du = u/m - (c/m^2) ln(m*u + c).
  double area = 0;
  double tp_a = 0, fp_a = 0;
  for (std::size_t k = 0; k < rc.tp.size(); ++k) {
    const double tp_b = static_cast<double>(rc.tp[k]);
    const double fp_b = static_cast<double>(rc.fp[k]);
    const double d_tp = tp_b - tp_a;
    if (d_tp > 0) {
      const double slope = (fp_b - fp_a) / d_tp;
      const double m = 1.0 + slope;
      const double c = fp_a - slope * tp_a;
      double integral = d_tp / m;
      if (std::abs(c) > 1e-12) {
        integral -= c / (m * m) * (std::log(m * tp_b + c) - std::log(m * tp_a + c));
      }
      area += integral / rc.pos;
    }
    tp_a = tp_b;
    fp_a = fp_b;
  }
  return area;
}

std::vector<ReliabilityBin> reliability_bins(const PredictionSet& preds) {
  validate(preds);
  std::vector<ReliabilityBin> bins(10);
  std::vector<double> pred_sum(10, 0.0);
  std::vector<long> pos(10, 0);
  for (int b = 0; b < 10; ++b) {
    bins[b].bin = b;
    bins[b].lo = b / 10.0;
    bins[b].hi = (b + 1) / 10.0;
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    int b = static_cast<int>(preds.probs[i] * 10.0);
    if (b > 9) b = 9;  // 1.0 belongs to the last bin
    ++bins[b].count;
    pred_sum[b] += preds.probs[i];
    pos[b] += preds.labels[i];
  }
  for (int b = 0; b < 10; ++b) {
    if (bins[b].count > 0) {
      bins[b].mean_pred = pred_sum[b] / bins[b].count;
      bins[b].frac_pos = static_cast<double>(pos[b]) / bins[b].count;
    }
  }
  return bins;
}

double reliability_mad(const std::vector<ReliabilityBin>& bins) {
  double sum = 0;
  int populated = 0;
  for (const ReliabilityBin& b : bins) {
    if (b.count > 0) {
      sum += std::abs(*b.mean_pred - *b.frac_pos);
      ++populated;
    }
  }
  return populated > 0 ? sum / populated : 0.0;
}

double theoretical_threshold(const CostMatrix& costs) {
  if (!(costs.c10 > costs.c01 && costs.c01 > 0)) {
    throw std::invalid_argument(
        "cost matrix must satisfy c10 > c01 > 0");
  }
  return costs.c10 / (costs.c10 + costs.c01);
}

ConfusionMatrix confusion_at(const PredictionSet& preds, double threshold) {
  validate(preds);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool positive = preds.probs[i] > threshold;
    if (positive) {
      (preds.labels[i] == 1 ? m.tp : m.fp)++;
    } else {
      (preds.labels[i] == 1 ? m.fn : m.tn)++;
    }
  }
  return m;
}

double total_cost(const ConfusionMatrix& m, const CostMatrix& costs) {
  return static_cast<double>(m.fp) * costs.c10 +
         static_cast<double>(m.fn) * costs.c01;
}

ThresholdCost empirical_threshold(const PredictionSet& preds,
                                  const CostMatrix& costs) {
  validate(preds);
  ThresholdCost best{0.0, std::numeric_limits<double>::infinity()};
  for (double t : candidate_thresholds(preds.probs)) {
    const double cost = total_cost(confusion_at(preds, t), costs);
    if (cost <= best.cost) best = {t, cost};
  }
  return best;
}

void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points) {
  out << "fpr,tpr\n";
  for (const RocPoint& p : points) {
    out << format_g9(p.fpr) << ',' << format_g9(p.tpr) << '\n';
  }
}

void write_pr_csv(std::ostream& out, const std::vector<PrPoint>& points) {
  out << "recall,precision\n";
  for (const PrPoint& p : points) {
    out << format_g9(p.recall) << ',' << format_g9(p.precision) << '\n';
  }
}

void write_reliability_csv(std::ostream& out,
                           const std::vector<ReliabilityBin>& bins) {
  out << "bin,lo,hi,count,mean_pred,frac_pos\n";
  for (const ReliabilityBin& b : bins) {
    out << b.bin << ',' << format_g9(b.lo) << ',' << format_g9(b.hi) << ','
        << b.count << ',';
    if (b.mean_pred) out << format_g9(*b.mean_pred);
    out << ',';
    if (b.frac_pos) out << format_g9(*b.frac_pos);
    out << '\n';
  }
}

}  // namespace vandet

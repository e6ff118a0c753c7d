#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

namespace vandet {

/// Parallel probability/label arrays. Labels are 0 (legitimate) and
/// 1 (vandalism); probabilities lie in [0, 1].
struct PredictionSet {
  std::vector<double> probs;
  std::vector<int> labels;

  std::size_t size() const { return probs.size(); }
};

/// Throws std::invalid_argument when lengths differ, the set is empty,
/// a probability leaves [0, 1], or a label is not 0/1.
void validate(const PredictionSet& preds);

double rmse(const PredictionSet& preds);

/// Classification rule everywhere: predicted positive iff prob > threshold.
double accuracy_at(const PredictionSet& preds, double threshold);

struct ThresholdAccuracy {
  double threshold;
  double accuracy;
};

/// Scans midpoints between adjacent distinct probabilities plus {0, 1};
/// ties prefer the larger threshold.
ThresholdAccuracy best_accuracy_threshold(const PredictionSet& preds);

/// Continuity-corrected chi-square on the disagreement counts:
/// (|n01 - n10| - 1)^2 / (n01 + n10), or 0 when there is no disagreement.
double mcnemar_chi2(const std::vector<bool>& correct_a,
                    const std::vector<bool>& correct_b);

struct RocPoint {
  double fpr;
  double tpr;
};

/// One point per distinct threshold, descending; begins at (0,0) and ends at
/// (1,1). Requires both classes present.
std::vector<RocPoint> roc_points(const PredictionSet& preds);

/// Trapezoidal area under roc_points. Also computed as the Mann-Whitney rank
/// statistic (ties count one half); the two must agree to 1e-12 or a
/// logic_error is thrown.
double auc_roc(const PredictionSet& preds);

struct PrPoint {
  double recall;
  double precision;
};

/// One point per distinct threshold, descending. Requires >= 1 positive.
std::vector<PrPoint> pr_points(const PredictionSet& preds);

/// Area under the precision-recall curve with interpolation linear in the
/// true-positive count (not linear in PR space, which would overestimate).
double auc_pr(const PredictionSet& preds);

struct ReliabilityBin {
  int bin = 0;  // 0..9
  double lo = 0;
  double hi = 0;
  long count = 0;
  std::optional<double> mean_pred;  // absent when the bin is empty
  std::optional<double> frac_pos;
};

/// Ten equal-width bins [0,0.1), ..., [0.9,1.0]; empty bins are reported
/// with count 0, not interpolated.
std::vector<ReliabilityBin> reliability_bins(const PredictionSet& preds);

/// Mean |mean_pred - frac_pos| over populated bins: distance of the
/// reliability diagram from the diagonal.
double reliability_mad(const std::vector<ReliabilityBin>& bins);

/// Misclassification costs; correct classifications cost nothing.
/// Indices are (predicted, actual): c10 = false positive, c01 = false
/// negative.
struct CostMatrix {
  double c01 = 1.0;
  double c10 = 4.0;
};

/// Cost-optimal operating point c10 / (c10 + c01).
double theoretical_threshold(const CostMatrix& costs);

struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  double tp_pct() const { return 100.0 * tp / total(); }
  double fp_pct() const { return 100.0 * fp / total(); }
  double tn_pct() const { return 100.0 * tn / total(); }
  double fn_pct() const { return 100.0 * fn / total(); }
};

ConfusionMatrix confusion_at(const PredictionSet& preds, double threshold);

double total_cost(const ConfusionMatrix& m, const CostMatrix& costs);

struct ThresholdCost {
  double threshold;
  double cost;
};

/// Minimizes total cost over the same candidate set as
/// best_accuracy_threshold; ties prefer the larger threshold. Never worse
/// than the theoretical threshold on the same set.
ThresholdCost empirical_threshold(const PredictionSet& preds,
                                  const CostMatrix& costs);

/// CSV emitters (header row + data rows) for external plotting.
void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points);
void write_pr_csv(std::ostream& out, const std::vector<PrPoint>& points);
void write_reliability_csv(std::ostream& out,
                           const std::vector<ReliabilityBin>& bins);

}  // namespace vandet

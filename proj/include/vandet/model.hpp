#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vandet/features.hpp"
#include "vandet/sparse.hpp"

namespace vandet {

struct TrainConfig {
  double c = 1.0;               // penalty weight on the loss term
  double bias_value = 1.0;      // appended constant feature; <= 0 disables bias
  double tolerance = 1e-4;      // relative gradient-norm stopping threshold
  int max_iterations = 1000;
  std::uint64_t seed = 0;       // recorded for provenance; solver is exact
};

/// Stepwise-constant nondecreasing map from raw scores to probabilities.
/// k breakpoints split the real line into k+1 blocks.
class IsotonicMap {
 public:
  IsotonicMap(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double score) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const IsotonicMap&, const IsotonicMap&) = default;

 private:
  std::vector<double> breakpoints_;  // strictly increasing
  std::vector<double> values_;       // nondecreasing, in [0, 1]
};

struct LinearModel {
  Eigen::VectorXd weights;  // size n_features
  double bias_weight = 0.0;
  double bias_value = 0.0;  // 0 means the model was trained without bias
  std::int32_t n_features = 0;
  ScalingKind scaling = ScalingKind::kAtan;
  double c = 1.0;
  std::optional<IsotonicMap> calibration;

  /// w.x + bias_weight * bias_value; entries with out-of-range ids dropped.
  double decision_value(const SparseVector& x) const;

  /// Logistic probability of the positive class, in (0, 1).
  double predict_raw(const SparseVector& x) const;

  /// Calibrated probability when a calibration map is attached, else raw.
  double predict(const SparseVector& x) const;
};

/// Value of 0.5*w.w + c * sum_i log(1 + exp(-y_i * w.x_i)) at the augmented
/// weight vector w (last coordinate is the bias weight when bias_value > 0).
/// Exposed so tests can cross-check the solver against the formula directly.
double lr_objective(const Eigen::VectorXd& w,
                    const std::vector<LabeledInstance>& instances, double c,
                    double bias_value, std::int32_t n_features);

Eigen::VectorXd lr_gradient(const Eigen::VectorXd& w,
                            const std::vector<LabeledInstance>& instances,
                            double c, double bias_value,
                            std::int32_t n_features);

/// Thrown when the trust-region solver runs out of iterations (or stalls)
/// before reaching the gradient tolerance. Carries the last iterate.
class TrainFailure : public std::runtime_error {
 public:
  TrainFailure(const std::string& what, Eigen::VectorXd last_weights,
               double gradient_norm, int iterations)
      : std::runtime_error(what),
        last_weights(std::move(last_weights)),
        gradient_norm(gradient_norm),
        iterations(iterations) {}

  Eigen::VectorXd last_weights;  // augmented vector at the point of failure
  double gradient_norm;
  int iterations;
};

/// Trust-region Newton training of the regularized logistic objective.
/// Stops when ||g|| <= tolerance * max(1, ||g at w=0||). n_features <= 0
/// means infer from the data. The returned model's scaling field is left at
/// its default; callers that scaled their inputs should set it afterwards.
LinearModel train(const std::vector<LabeledInstance>& instances,
                  std::int32_t n_features, const TrainConfig& cfg);

/// Pool-adjacent-violators isotonic fit of labels (0/1) against scores.
/// Equal scores are pooled into one initial block. Fewer than 1000 points
/// prints a warning to `warnings` when given.
IsotonicMap fit_pav(const std::vector<double>& scores,
                    const std::vector<int>& labels,
                    std::ostream* warnings = nullptr);

/// Text round-trip at 17 significant digits. Lines starting with `#` before
/// the header are comments; a nonempty `comment` is written as one.
void save_model(const std::filesystem::path& path, const LinearModel& model,
                const std::string& comment = {});
LinearModel load_model(const std::filesystem::path& path);

}  // namespace vandet

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vandet/eval.hpp"
#include "vandet/features.hpp"
#include "vandet/model.hpp"
#include "vandet/sparse.hpp"
#include "vandet/synth.hpp"

namespace vandet {

struct SplitSpec {
  double train_frac = 0.50;
  double valid_frac = 0.25;
  double test_frac = 0.25;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train, valid, test;
};

/// Seeded random partition: floor(n * train_frac) to train, floor(n *
/// valid_frac) to valid, remainder to test. Requires n >= 4 and fractions
/// summing to 1.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

template <typename T>
std::array<std::vector<T>, 3> apply_split(const std::vector<T>& items,
                                          const SplitIndices& idx) {
  std::array<std::vector<T>, 3> out;
  const std::vector<std::size_t>* parts[3] = {&idx.train, &idx.valid,
                                              &idx.test};
  for (int p = 0; p < 3; ++p) {
    out[p].reserve(parts[p]->size());
    for (std::size_t i : *parts[p]) out[p].push_back(items.at(i));
  }
  return out;
}

/// 2^-5, 2^-4, ..., 2^11 (17 values).
std::vector<double> default_c_values();

struct SweepRow {
  double c = 0;
  bool failed = false;
  std::string failure;
  double train_rmse = 0;
  double train_rmse_calibrated = 0;
  double valid_rmse = 0;
  double valid_rmse_calibrated = 0;
  double best_threshold = 0;   // accuracy-optimal on calibrated train preds
  double valid_accuracy = 0;   // at best_threshold
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Winners by calibrated and by raw validation RMSE; absent when every
  // penalty value failed. Ties go to the smaller penalty.
  std::optional<std::size_t> best_calibrated;
  std::optional<std::size_t> best_raw;
};

/// Trains one model per penalty value (ascending), calibrates each on its
/// training predictions, and scores both splits. Solver failures are
/// recorded in the row and the sweep continues.
SweepResult sweep_c(const std::vector<LabeledInstance>& train,
                    const std::vector<LabeledInstance>& valid,
                    std::int32_t n_features,
                    const std::vector<double>& c_values,
                    const TrainConfig& base, std::ostream* log = nullptr);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

struct LearningCurvePoint {
  std::size_t size = 0;
  int iterations = 0;
  bool clamped = false;  // requested size exceeded the training set
  double mean_one_minus_rmse = 0;
  double stddev = 0;
};

/// Training-set sizes 10, 100, ... below |train|, plus the full size
/// (or `requested_sizes` if nonempty; sizes above |train| are clamped and
/// flagged). Each partial size: 10 seeded random subsamples, trained
/// uncalibrated, scored as 1 - RMSE on the full validation split. The full
/// size runs once.
std::vector<LearningCurvePoint> learning_curve(
    const std::vector<LabeledInstance>& train,
    const std::vector<LabeledInstance>& valid, std::int32_t n_features,
    const TrainConfig& cfg, std::uint64_t seed, std::ostream* log = nullptr,
    std::vector<std::size_t> requested_sizes = {});

void write_learning_curve_csv(std::ostream& out,
                              const std::vector<LearningCurvePoint>& curve);

/// Experiment configuration; file format is `key = value` lines with `#`
/// comments. An empty corpus path means "generate a synthetic one".
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out_dir = "run-out";
  ScalingKind scaling = ScalingKind::kBinary;
  std::vector<double> c_values;  // empty -> default_c_values()
  double bias_value = 1.0;
  double tolerance = 1e-4;
  int max_iterations = 1000;
  std::uint64_t seed = 42;
  double cost_fp = 4.0;
  int revert_window = 10;
  bool deterministic = false;
  bool with_learning_curve = false;
  SynthParams synth;  // used when corpus is empty; synth.seed follows seed

  static RunConfig parse(std::istream& in);
  static RunConfig from_file(const std::filesystem::path& path);

  /// Canonical key = value rendering of every field that affects results
  /// (out_dir excluded). Hashed for provenance.
  std::string canonical_text() const;
  std::string config_hash() const;  // 16 hex digits
};

struct RunResult {
  std::filesystem::path metrics_path;
  std::filesystem::path model_path;
  double valid_auc_roc = 0;
  double train_rmse = 0;
  double train_rmse_calibrated = 0;
  double train_reliability_mad = 0;
  double train_reliability_mad_calibrated = 0;
  std::vector<LearningCurvePoint> curve;
};

/// ingest -> featurize -> split -> sweep -> calibrate -> evaluate, writing
/// model, metrics JSON, and CSV curves under cfg.out_dir. A stage failure
/// throws a "[stage] ..." runtime_error and leaves a FAILED marker file.
RunResult run_experiment(const RunConfig& cfg, std::ostream& log);

}  // namespace vandet

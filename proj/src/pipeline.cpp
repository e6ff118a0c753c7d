#include "vandet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vandet/ingest.hpp"
#include "vandet/rng.hpp"
#include "vandet/text.hpp"
#include "vandet/xml.hpp"

namespace vandet {

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n < 4) throw std::invalid_argument("need at least 4 instances to split");
  if (spec.train_frac < 0 || spec.valid_frac < 0 || spec.test_frac < 0 ||
      std::abs(spec.train_frac + spec.valid_frac + spec.test_frac - 1.0) >
          1e-9) {
    throw std::invalid_argument("split fractions must be >= 0 and sum to 1");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(perm);
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * spec.train_frac));
  const auto n_valid = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * spec.valid_frac));
  SplitIndices idx;
  idx.train.assign(perm.begin(), perm.begin() + n_train);
  idx.valid.assign(perm.begin() + n_train, perm.begin() + n_train + n_valid);
  idx.test.assign(perm.begin() + n_train + n_valid, perm.end());
  return idx;
}

std::vector<double> default_c_values() {
  std::vector<double> values;
  for (int e = -5; e <= 11; ++e) values.push_back(std::ldexp(1.0, e));
  return values;
}

namespace {

std::vector<int> labels01(const std::vector<LabeledInstance>& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const LabeledInstance& inst : data) out.push_back(inst.label > 0);
  return out;
}

std::vector<double> raw_scores(const LinearModel& model,
                               const std::vector<LabeledInstance>& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const LabeledInstance& inst : data) {
    out.push_back(model.predict_raw(inst.features));
  }
  return out;
}

std::vector<double> apply_map(const IsotonicMap& map,
                              const std::vector<double>& scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(map(s));
  return out;
}

}  // namespace

SweepResult sweep_c(const std::vector<LabeledInstance>& train,
                    const std::vector<LabeledInstance>& valid,
                    std::int32_t n_features,
                    const std::vector<double>& c_values,
                    const TrainConfig& base, std::ostream* log) {
  if (train.empty() || valid.empty()) {
    throw std::invalid_argument("sweep needs nonempty train and valid splits");
  }
  if (c_values.empty()) {
    throw std::invalid_argument("sweep needs at least one penalty value");
  }
  std::vector<double> cs = c_values;
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  if (cs.front() <= 0) {
    throw std::invalid_argument("penalty values must be > 0");
  }

  const std::vector<int> train_labels = labels01(train);
  const std::vector<int> valid_labels = labels01(valid);

  SweepResult result;
  for (double c : cs) {
    SweepRow row;
    row.c = c;
    TrainConfig cfg = base;
    cfg.c = c;
    try {
      const LinearModel model = vandet::train(train, n_features, cfg);
      const std::vector<double> train_raw = raw_scores(model, train);
      const std::vector<double> valid_raw = raw_scores(model, valid);
      const IsotonicMap map = fit_pav(train_raw, train_labels, log);
      const std::vector<double> train_cal = apply_map(map, train_raw);
      const std::vector<double> valid_cal = apply_map(map, valid_raw);

      row.train_rmse = rmse({train_raw, train_labels});
      row.train_rmse_calibrated = rmse({train_cal, train_labels});
      row.valid_rmse = rmse({valid_raw, valid_labels});
      row.valid_rmse_calibrated = rmse({valid_cal, valid_labels});
      const ThresholdAccuracy best =
          best_accuracy_threshold({train_cal, train_labels});
      row.best_threshold = best.threshold;
      row.valid_accuracy =
          accuracy_at({valid_cal, valid_labels}, best.threshold);
    } catch (const TrainFailure& e) {
      row.failed = true;
      row.failure = e.what();
    }
    if (log) {
      *log << "sweep c=" << format_g9(c);
      if (row.failed) {
        *log << " failed: " << row.failure << '\n';
      } else {
        *log << " valid_rmse=" << format_g9(row.valid_rmse)
             << " calibrated=" << format_g9(row.valid_rmse_calibrated) << '\n';
      }
    }
    result.rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].failed) continue;
    if (!result.best_calibrated ||
        result.rows[i].valid_rmse_calibrated <
            result.rows[*result.best_calibrated].valid_rmse_calibrated) {
      result.best_calibrated = i;
    }
    if (!result.best_raw ||
        result.rows[i].valid_rmse <
            result.rows[*result.best_raw].valid_rmse) {
      result.best_raw = i;
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "c,failed,train_rmse,train_rmse_calibrated,valid_rmse,"
         "valid_rmse_calibrated,best_threshold,valid_accuracy\n";
  for (const SweepRow& row : sweep.rows) {
    out << format_g9(row.c) << ',' << (row.failed ? 1 : 0) << ',';
    if (!row.failed) {
      out << format_g9(row.train_rmse) << ','
          << format_g9(row.train_rmse_calibrated) << ','
          << format_g9(row.valid_rmse) << ','
          << format_g9(row.valid_rmse_calibrated) << ','
          << format_g9(row.best_threshold) << ','
          << format_g9(row.valid_accuracy);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
}

std::vector<LearningCurvePoint> learning_curve(
    const std::vector<LabeledInstance>& train,
    const std::vector<LabeledInstance>& valid, std::int32_t n_features,
    const TrainConfig& cfg, std::uint64_t seed, std::ostream* log,
    std::vector<std::size_t> requested_sizes) {
  if (train.empty() || valid.empty()) {
    throw std::invalid_argument("learning curve needs nonempty splits");
  }
  const std::size_t n = train.size();
  std::vector<std::size_t> sizes = std::move(requested_sizes);
  std::vector<bool> clamped(sizes.size(), false);
  if (sizes.empty()) {
    for (std::size_t s = 10; s < n; s *= 10) sizes.push_back(s);
    sizes.push_back(n);
    clamped.assign(sizes.size(), false);
  } else {
    std::sort(sizes.begin(), sizes.end());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] > n) {
        sizes[i] = n;
        clamped[i] = true;
      }
      if (sizes[i] == 0) throw std::invalid_argument("size 0 in curve sizes");
    }
  }

  const std::vector<int> valid_labels = labels01(valid);
  Rng rng(seed);
  std::vector<LearningCurvePoint> curve;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const std::size_t size = sizes[k];
    const int iterations = size >= n ? 1 : 10;
    std::vector<double> scores;
    for (int it = 0; it < iterations; ++it) {
      std::vector<LabeledInstance> subset;
      if (size >= n) {
        subset = train;
      } else {
        subset.reserve(size);
        for (std::size_t i : rng.sample_without_replacement(n, size)) {
          subset.push_back(train[i]);
        }
      }
      const LinearModel model = vandet::train(subset, n_features, cfg);
      scores.push_back(1.0 - rmse({raw_scores(model, valid), valid_labels}));
    }
    LearningCurvePoint point;
    point.size = size;
    point.iterations = iterations;
    point.clamped = clamped[k];
    const double mean =
        std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
    double var = 0;
    for (double s : scores) var += (s - mean) * (s - mean);
    point.mean_one_minus_rmse = mean;
    point.stddev =
        scores.size() > 1 ? std::sqrt(var / (scores.size() - 1)) : 0.0;
    if (log) {
      *log << "learning curve size=" << size
           << " mean=" << format_g9(point.mean_one_minus_rmse)
           << " std=" << format_g9(point.stddev) << '\n';
    }
    curve.push_back(point);
  }
  return curve;
}

void write_learning_curve_csv(std::ostream& out,
                              const std::vector<LearningCurvePoint>& curve) {
  out << "size,iterations,clamped,mean_one_minus_rmse,stddev\n";
  for (const LearningCurvePoint& p : curve) {
    out << p.size << ',' << p.iterations << ',' << (p.clamped ? 1 : 0) << ','
        << format_g9(p.mean_one_minus_rmse) << ',' << format_g9(p.stddev)
        << '\n';
  }
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for '" + key + "': " + v);
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for '" + key + "': " + v);
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "corpus") {
      cfg.corpus = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "scaling") {
      cfg.scaling = scaling_kind_from_string(value);
    } else if (key == "c_values") {
      cfg.c_values.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        cfg.c_values.push_back(parse_num(trim(item), key));
      }
    } else if (key == "bias") {
      cfg.bias_value = parse_num(value, key);
    } else if (key == "tolerance") {
      cfg.tolerance = parse_num(value, key);
    } else if (key == "max_iterations") {
      cfg.max_iterations = static_cast<int>(parse_num(value, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_num(value, key));
    } else if (key == "cost_fp") {
      cfg.cost_fp = parse_num(value, key);
    } else if (key == "revert_window") {
      cfg.revert_window = static_cast<int>(parse_num(value, key));
    } else if (key == "deterministic") {
      cfg.deterministic = parse_bool(value, key);
    } else if (key == "learning_curve") {
      cfg.with_learning_curve = parse_bool(value, key);
    } else if (key == "pages") {
      cfg.synth.pages = static_cast<int>(parse_num(value, key));
    } else if (key == "vandalism_rate") {
      cfg.synth.vandalism_rate = parse_num(value, key);
    } else if (key == "base_vocab") {
      cfg.synth.base_vocab = static_cast<int>(parse_num(value, key));
    } else if (key == "vandal_vocab") {
      cfg.synth.vandal_vocab = static_cast<int>(parse_num(value, key));
    } else if (key == "min_runs") {
      cfg.synth.min_runs_per_page = static_cast<int>(parse_num(value, key));
    } else if (key == "max_runs") {
      cfg.synth.max_runs_per_page = static_cast<int>(parse_num(value, key));
    } else {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse(in);
}

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "base_vocab = " << synth.base_vocab << '\n';
  out << "bias = " << format_g17(bias_value) << '\n';
  out << "c_values = ";
  const std::vector<double>& cs =
      c_values.empty() ? default_c_values() : c_values;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i > 0) out << ',';
    out << format_g17(cs[i]);
  }
  out << '\n';
  out << "corpus = " << corpus.generic_string() << '\n';
  out << "cost_fp = " << format_g17(cost_fp) << '\n';
  out << "deterministic = " << (deterministic ? 1 : 0) << '\n';
  out << "learning_curve = " << (with_learning_curve ? 1 : 0) << '\n';
  out << "max_iterations = " << max_iterations << '\n';
  out << "max_runs = " << synth.max_runs_per_page << '\n';
  out << "min_runs = " << synth.min_runs_per_page << '\n';
  out << "pages = " << synth.pages << '\n';
  out << "revert_window = " << revert_window << '\n';
  out << "scaling = " << to_string(scaling) << '\n';
  out << "seed = " << seed << '\n';
  out << "tolerance = " << format_g17(tolerance) << '\n';
  out << "vandal_vocab = " << synth.vandal_vocab << '\n';
  out << "vandalism_rate = " << format_g17(synth.vandalism_rate) << '\n';
  return out.str();
}

std::string RunConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

namespace {

PredictionSet predictions(const LinearModel& model,
                          const std::vector<LabeledInstance>& data,
                          bool calibrated) {
  PredictionSet ps;
  ps.probs.reserve(data.size());
  ps.labels.reserve(data.size());
  for (const LabeledInstance& inst : data) {
    ps.probs.push_back(calibrated ? model.predict(inst.features)
                                  : model.predict_raw(inst.features));
    ps.labels.push_back(inst.label > 0);
  }
  return ps;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename WriteFn>
void write_csv_file(const std::filesystem::path& path,
                    const std::string& provenance, WriteFn&& write) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# " << provenance << '\n';
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json bins_to_json(const std::vector<ReliabilityBin>& bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ReliabilityBin& b : bins) {
    nlohmann::json row;
    row["bin"] = b.bin;
    row["count"] = b.count;
    if (b.mean_pred) row["mean_pred"] = *b.mean_pred;
    if (b.frac_pos) row["frac_pos"] = *b.frac_pos;
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path failed_marker = cfg.out_dir / "FAILED";
  fs::remove(failed_marker);
  const std::string provenance =
      "config " + cfg.config_hash() + " seed " + std::to_string(cfg.seed);

  std::string stage = "setup";
  try {
    write_text_file(cfg.out_dir / "config.txt",
                    "# " + provenance + "\n" + cfg.canonical_text());

    // --- ingest ---
    stage = "ingest";
    fs::path corpus = cfg.corpus;
    if (corpus.empty()) {
      SynthParams params = cfg.synth;
      params.seed = cfg.seed;
      corpus = cfg.out_dir / "corpus.xml";
      const SynthStats synth_stats = synth_corpus_files(
          params, corpus, cfg.out_dir / "truth.jsonl");
      log << "[ingest] generated " << synth_stats.pages << " pages, "
          << synth_stats.revisions << " revisions, " << synth_stats.runs
          << " anonymous runs (" << synth_stats.vandal_runs << " vandal)\n";
    }
    IngestStats ingest_stats;
    IngestOptions ingest_options;
    ingest_options.window = cfg.revert_window;
    std::vector<RevisionCase> cases =
        ingest_stream(open_source(corpus), ingest_options, &ingest_stats);
    log << "[ingest] " << ingest_stats.pages << " pages, "
        << ingest_stats.revisions << " revisions -> " << ingest_stats.cases
        << " cases (" << ingest_stats.vandalism_cases << " vandalism)\n";
    {
      std::ofstream out(cfg.out_dir / "cases.jsonl");
      if (!out) throw std::runtime_error("cannot open cases.jsonl");
      out << nlohmann::json{{"provenance", provenance}}.dump() << '\n';
      write_cases_jsonl(out, cases);
    }

    // --- featurize ---
    stage = "featurize";
    SplitSpec split_spec;
    split_spec.seed = cfg.seed;
    const SplitIndices idx = split_indices(cases.size(), split_spec);

    std::vector<CaseAnalysis> analyses;
    analyses.reserve(cases.size());
    for (const RevisionCase& c : cases) analyses.push_back(analyze_case(c));

    std::vector<CaseAnalysis> train_analyses;
    train_analyses.reserve(idx.train.size());
    for (std::size_t i : idx.train) train_analyses.push_back(analyses[i]);
    const VocabMap vocab = VocabMap::build(train_analyses);

    std::vector<SparseVector> raw(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
      raw[i] = assemble_raw(analyses[i], vocab);
    }
    std::vector<SparseVector> train_raw_vectors;
    train_raw_vectors.reserve(idx.train.size());
    for (std::size_t i : idx.train) train_raw_vectors.push_back(raw[i]);
    const ScalingSpec scaling = ScalingSpec::fit(cfg.scaling,
                                                 train_raw_vectors);

    std::vector<LabeledInstance> all(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
      all[i].features =
          apply_scaling(raw[i], scaling, vocab.ancillary_offset());
      all[i].label = cases[i].vandalism ? 1 : -1;
    }
    const auto [train_set, valid_set, test_set] = apply_split(all, idx);
    log << "[featurize] vocab " << vocab.word_count() << " words, "
        << vocab.feature_count() << " feature slots; split "
        << train_set.size() << "/" << valid_set.size() << "/"
        << test_set.size() << '\n';

    vocab.save(cfg.out_dir / "vocab.tsv", provenance);
    scaling.save(cfg.out_dir / "scaling.txt", provenance);
    save_instances(cfg.out_dir / "train.dat", train_set, provenance);
    save_instances(cfg.out_dir / "valid.dat", valid_set, provenance);
    save_instances(cfg.out_dir / "test.dat", test_set, provenance);

    // --- sweep ---
    stage = "sweep";
    TrainConfig base;
    base.bias_value = cfg.bias_value;
    base.tolerance = cfg.tolerance;
    base.max_iterations = cfg.max_iterations;
    base.seed = cfg.seed;
    const std::vector<double> cs =
        cfg.c_values.empty() ? default_c_values() : cfg.c_values;
    const SweepResult sweep =
        sweep_c(train_set, valid_set, vocab.feature_count(), cs, base, &log);
    write_csv_file(cfg.out_dir / "sweep.csv", provenance,
                   [&](std::ostream& out) { write_sweep_csv(out, sweep); });
    if (!sweep.best_calibrated) {
      throw std::runtime_error("every penalty value failed to train");
    }
    const double best_c = sweep.rows[*sweep.best_calibrated].c;
    const double best_c_raw = sweep.rows[*sweep.best_raw].c;
    log << "[sweep] best c " << format_g9(best_c) << " (calibrated), "
        << format_g9(best_c_raw) << " (raw)\n";

    // --- calibrate ---
    stage = "calibrate";
    TrainConfig final_cfg = base;
    final_cfg.c = best_c;
    LinearModel model = train(train_set, vocab.feature_count(), final_cfg);
    model.scaling = cfg.scaling;
    const std::vector<double> train_scores = raw_scores(model, train_set);
    model.calibration = fit_pav(train_scores, labels01(train_set), &log);
    const fs::path model_path = cfg.out_dir / "model.txt";
    save_model(model_path, model, provenance);

    // --- evaluate ---
    stage = "evaluate";
    const PredictionSet train_raw_preds = predictions(model, train_set, false);
    const PredictionSet train_cal_preds = predictions(model, train_set, true);
    const PredictionSet valid_raw_preds = predictions(model, valid_set, false);
    const PredictionSet valid_cal_preds = predictions(model, valid_set, true);
    const PredictionSet test_cal_preds = predictions(model, test_set, true);

    const ThresholdAccuracy operating =
        best_accuracy_threshold(train_cal_preds);
    const CostMatrix costs{1.0, cfg.cost_fp};
    const double thr_theory = theoretical_threshold(costs);
    const double cost_theory =
        total_cost(confusion_at(valid_cal_preds, thr_theory), costs);
    const ThresholdCost thr_empirical =
        empirical_threshold(valid_cal_preds, costs);

    const auto train_bins_raw = reliability_bins(train_raw_preds);
    const auto train_bins_cal = reliability_bins(train_cal_preds);
    const auto valid_bins_raw = reliability_bins(valid_raw_preds);
    const auto valid_bins_cal = reliability_bins(valid_cal_preds);

    write_csv_file(cfg.out_dir / "roc_valid.csv", provenance,
                   [&](std::ostream& out) {
                     write_roc_csv(out, roc_points(valid_cal_preds));
                   });
    write_csv_file(cfg.out_dir / "pr_valid.csv", provenance,
                   [&](std::ostream& out) {
                     write_pr_csv(out, pr_points(valid_cal_preds));
                   });
    write_csv_file(cfg.out_dir / "roc_test.csv", provenance,
                   [&](std::ostream& out) {
                     write_roc_csv(out, roc_points(test_cal_preds));
                   });
    write_csv_file(cfg.out_dir / "pr_test.csv", provenance,
                   [&](std::ostream& out) {
                     write_pr_csv(out, pr_points(test_cal_preds));
                   });
    write_csv_file(cfg.out_dir / "reliability_train_raw.csv", provenance,
                   [&](std::ostream& out) {
                     write_reliability_csv(out, train_bins_raw);
                   });
    write_csv_file(cfg.out_dir / "reliability_train_calibrated.csv",
                   provenance, [&](std::ostream& out) {
                     write_reliability_csv(out, train_bins_cal);
                   });
    write_csv_file(cfg.out_dir / "reliability_valid_raw.csv", provenance,
                   [&](std::ostream& out) {
                     write_reliability_csv(out, valid_bins_raw);
                   });
    write_csv_file(cfg.out_dir / "reliability_valid_calibrated.csv",
                   provenance, [&](std::ostream& out) {
                     write_reliability_csv(out, valid_bins_cal);
                   });

    RunResult result;
    result.model_path = model_path;
    result.train_rmse = rmse(train_raw_preds);
    result.train_rmse_calibrated = rmse(train_cal_preds);
    result.train_reliability_mad = reliability_mad(train_bins_raw);
    result.train_reliability_mad_calibrated = reliability_mad(train_bins_cal);
    result.valid_auc_roc = auc_roc(valid_cal_preds);

    // --- learning curve (optional) ---
    if (cfg.with_learning_curve) {
      stage = "learning-curve";
      TrainConfig curve_cfg = base;
      curve_cfg.c = best_c_raw;
      result.curve = learning_curve(train_set, valid_set,
                                    vocab.feature_count(), curve_cfg,
                                    cfg.seed, &log);
      write_csv_file(cfg.out_dir / "learning_curve.csv", provenance,
                     [&](std::ostream& out) {
                       write_learning_curve_csv(out, result.curve);
                     });
    }

    // --- report ---
    stage = "report";
    nlohmann::json m;
    m["schema_version"] = 1;
    m["config_hash"] = cfg.config_hash();
    m["seed"] = cfg.seed;
    m["deterministic"] = cfg.deterministic;
    m["scaling"] = to_string(cfg.scaling);
    m["cost_fp"] = cfg.cost_fp;
    m["counts"] = {{"pages", ingest_stats.pages},
                   {"revisions", ingest_stats.revisions},
                   {"skipped_revisions", ingest_stats.skipped_revisions},
                   {"cases", ingest_stats.cases},
                   {"vandalism_cases", ingest_stats.vandalism_cases},
                   {"train", train_set.size()},
                   {"valid", valid_set.size()},
                   {"test", test_set.size()},
                   {"vocab_words", vocab.word_count()},
                   {"feature_slots", vocab.feature_count()}};
    nlohmann::json sweep_rows = nlohmann::json::array();
    for (const SweepRow& row : sweep.rows) {
      nlohmann::json r;
      r["c"] = row.c;
      r["failed"] = row.failed;
      if (row.failed) {
        r["failure"] = row.failure;
      } else {
        r["train_rmse"] = row.train_rmse;
        r["train_rmse_calibrated"] = row.train_rmse_calibrated;
        r["valid_rmse"] = row.valid_rmse;
        r["valid_rmse_calibrated"] = row.valid_rmse_calibrated;
        r["best_threshold"] = row.best_threshold;
        r["valid_accuracy"] = row.valid_accuracy;
      }
      sweep_rows.push_back(std::move(r));
    }
    m["sweep"] = std::move(sweep_rows);
    m["best_c"] = best_c;
    m["best_c_raw"] = best_c_raw;
    m["operating_threshold"] = operating.threshold;

    m["train"] = {{"rmse", result.train_rmse},
                  {"rmse_calibrated", result.train_rmse_calibrated},
                  {"one_minus_rmse_calibrated",
                   1.0 - result.train_rmse_calibrated},
                  {"accuracy", operating.accuracy},
                  {"reliability_mad", result.train_reliability_mad},
                  {"reliability_mad_calibrated",
                   result.train_reliability_mad_calibrated},
                  {"reliability_raw", bins_to_json(train_bins_raw)},
                  {"reliability_calibrated", bins_to_json(train_bins_cal)}};
    m["valid"] = {{"rmse", rmse(valid_raw_preds)},
                  {"rmse_calibrated", rmse(valid_cal_preds)},
                  {"one_minus_rmse_calibrated", 1.0 - rmse(valid_cal_preds)},
                  {"accuracy", accuracy_at(valid_cal_preds,
                                           operating.threshold)},
                  {"auc_roc", result.valid_auc_roc},
                  {"auc_pr", auc_pr(valid_cal_preds)},
                  {"reliability_mad", reliability_mad(valid_bins_raw)},
                  {"reliability_mad_calibrated",
                   reliability_mad(valid_bins_cal)},
                  {"theoretical_threshold", thr_theory},
                  {"theoretical_cost", cost_theory},
                  {"empirical_threshold", thr_empirical.threshold},
                  {"empirical_cost", thr_empirical.cost}};
    const ConfusionMatrix test_confusion =
        confusion_at(test_cal_preds, operating.threshold);
    m["test"] = {{"rmse_calibrated", rmse(test_cal_preds)},
                 {"one_minus_rmse_calibrated", 1.0 - rmse(test_cal_preds)},
                 {"accuracy", accuracy_at(test_cal_preds,
                                          operating.threshold)},
                 {"auc_roc", auc_roc(test_cal_preds)},
                 {"auc_pr", auc_pr(test_cal_preds)},
                 {"confusion", {{"tp", test_confusion.tp},
                                {"fp", test_confusion.fp},
                                {"tn", test_confusion.tn},
                                {"fn", test_confusion.fn}}}};
    if (cfg.with_learning_curve) {
      nlohmann::json curve_rows = nlohmann::json::array();
      for (const LearningCurvePoint& p : result.curve) {
        curve_rows.push_back({{"size", p.size},
                              {"iterations", p.iterations},
                              {"clamped", p.clamped},
                              {"mean_one_minus_rmse", p.mean_one_minus_rmse},
                              {"stddev", p.stddev}});
      }
      m["learning_curve"] = std::move(curve_rows);
    }

    const fs::path metrics_path = cfg.out_dir / "metrics.json";
    write_text_file(metrics_path, m.dump(2) + "\n");
    result.metrics_path = metrics_path;
    log << "[report] wrote " << metrics_path.generic_string() << '\n';
    return result;
  } catch (const std::exception& e) {
    const std::string tagged = "[" + stage + "] " + e.what();
    std::ofstream marker(failed_marker);
    marker << tagged << '\n';
    throw std::runtime_error(tagged);
  }
}

}  // namespace vandet

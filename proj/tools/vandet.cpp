// Command-line front end: each subcommand wraps one pipeline stage so
// experiments can be scripted piecemeal, while `run` drives the whole thing
// from a config file.
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vandet/eval.hpp"
#include "vandet/features.hpp"
#include "vandet/ingest.hpp"
#include "vandet/model.hpp"
#include "vandet/pipeline.hpp"
#include "vandet/sparse.hpp"
#include "vandet/synth.hpp"
#include "vandet/text.hpp"
#include "vandet/tokenize.hpp"

namespace {

using namespace vandet;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

PredictionSet predict_set(const LinearModel& model,
                          const std::vector<LabeledInstance>& data,
                          bool raw) {
  if (!raw && !model.calibration) {
    throw std::runtime_error(
        "model has no calibration map; pass --raw or run `vandet calibrate`");
  }
  PredictionSet ps;
  ps.probs.reserve(data.size());
  ps.labels.reserve(data.size());
  for (const LabeledInstance& inst : data) {
    ps.probs.push_back(raw ? model.predict_raw(inst.features)
                           : model.predict(inst.features));
    ps.labels.push_back(inst.label > 0);
  }
  return ps;
}

std::vector<double> parse_c_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::runtime_error("bad penalty value: " + item);
    }
  }
  if (out.empty()) throw std::runtime_error("empty penalty list");
  return out;
}

// Mirrors the featurize stage of run_experiment for standalone use: split at
// the case level, fit vocabulary and scaling on the training portion only.
struct FeaturizedSplits {
  VocabMap vocab;
  std::vector<LabeledInstance> train, valid, test;
  ScalingKind kind = ScalingKind::kBinary;
  ScalingSpec scaling{ScalingKind::kBinary};
};

FeaturizedSplits featurize_cases(const std::vector<RevisionCase>& cases,
                                 ScalingKind kind, std::uint64_t seed) {
  SplitSpec spec;
  spec.seed = seed;
  const SplitIndices idx = split_indices(cases.size(), spec);

  std::vector<CaseAnalysis> analyses;
  analyses.reserve(cases.size());
  for (const RevisionCase& c : cases) analyses.push_back(analyze_case(c));
  std::vector<CaseAnalysis> train_analyses;
  for (std::size_t i : idx.train) train_analyses.push_back(analyses[i]);

  FeaturizedSplits out;
  out.kind = kind;
  out.vocab = VocabMap::build(train_analyses);

  std::vector<SparseVector> raw(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    raw[i] = assemble_raw(analyses[i], out.vocab);
  }
  std::vector<SparseVector> train_raw;
  for (std::size_t i : idx.train) train_raw.push_back(raw[i]);
  out.scaling = ScalingSpec::fit(kind, train_raw);

  std::vector<LabeledInstance> all(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    all[i].features =
        apply_scaling(raw[i], out.scaling, out.vocab.ancillary_offset());
    all[i].label = cases[i].vandalism ? 1 : -1;
  }
  auto [train, valid, test] = apply_split(all, idx);
  out.train = std::move(train);
  out.valid = std::move(valid);
  out.test = std::move(test);
  return out;
}

void setup_synth(CLI::App& app) {
  struct Opts {
    std::string xml = "corpus.xml";
    std::string truth = "truth.jsonl";
    SynthParams params;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "synth", "Generate a synthetic revision-history corpus");
  sub->add_option("--xml", opt->xml, "Output XML path")
      ->capture_default_str();
  sub->add_option("--truth", opt->truth, "Ground-truth sidecar path (JSONL)")
      ->capture_default_str();
  sub->add_option("--pages", opt->params.pages, "Number of pages")
      ->capture_default_str();
  sub->add_option("--rate", opt->params.vandalism_rate,
                  "Target fraction of vandalism runs")
      ->capture_default_str();
  sub->add_option("--base-vocab", opt->params.base_vocab,
                  "Legitimate vocabulary size")
      ->capture_default_str();
  sub->add_option("--vandal-vocab", opt->params.vandal_vocab,
                  "Vandal vocabulary size")
      ->capture_default_str();
  sub->add_option("--min-runs", opt->params.min_runs_per_page,
                  "Minimum anonymous runs per page")
      ->capture_default_str();
  sub->add_option("--max-runs", opt->params.max_runs_per_page,
                  "Maximum anonymous runs per page")
      ->capture_default_str();
  sub->add_option("--seed", opt->params.seed, "Generator seed")
      ->capture_default_str();
  sub->callback([opt]() {
    const SynthStats stats =
        synth_corpus_files(opt->params, opt->xml, opt->truth);
    std::cerr << "synth: " << stats.pages << " pages, " << stats.revisions
              << " revisions, " << stats.runs << " anonymous runs ("
              << stats.vandal_runs << " vandal) -> " << opt->xml << '\n';
  });
}

void setup_ingest(CLI::App& app) {
  struct Opts {
    std::string corpus;
    std::string out = "cases.jsonl";
    int window = 10;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "ingest", "Extract labeled anonymous-edit cases from a dump");
  sub->add_option("--corpus", opt->corpus, "Dump path (.xml or .xml.gz)")
      ->required();
  sub->add_option("--out", opt->out, "Output cases path (JSONL)")
      ->capture_default_str();
  sub->add_option("--window", opt->window,
                  "Revert detection lookback (revisions)")
      ->capture_default_str();
  sub->callback([opt]() {
    IngestStats stats;
    IngestOptions options;
    options.window = opt->window;
    const std::vector<RevisionCase> cases =
        ingest_stream(open_source(opt->corpus), options, &stats);
    std::ofstream out = open_out(opt->out);
    write_cases_jsonl(out, cases);
    std::cerr << "ingest: " << stats.pages << " pages, " << stats.revisions
              << " revisions -> " << stats.cases << " cases ("
              << stats.vandalism_cases << " vandalism, "
              << stats.skipped_revisions << " skipped revisions)\n";
  });
}

void setup_tokenize(CLI::App& app) {
  struct Opts {
    std::string text;
    bool given = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "tokenize", "Print the token stream for a text (one per line)");
  sub->add_option("--text", opt->text,
                  "Text to tokenize (reads stdin when omitted)");
  sub->callback([opt, sub]() {
    std::string text = opt->text;
    if (sub->count("--text") == 0) {
      std::ostringstream buf;
      buf << std::cin.rdbuf();
      text = buf.str();
    }
    for (const std::string& token : tokenize(text)) {
      std::cout << token << '\n';
    }
  });
}

void setup_featurize(CLI::App& app) {
  struct Opts {
    std::string cases;
    std::string out_dir = ".";
    std::string scaling = "binary";
    std::uint64_t seed = 42;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "featurize",
      "Turn cases into scaled feature files (vocab fitted on the train "
      "split)");
  sub->add_option("--cases", opt->cases, "Cases path (JSONL)")->required();
  sub->add_option("--out-dir", opt->out_dir, "Output directory")
      ->capture_default_str();
  sub->add_option("--scaling", opt->scaling, "atan | binary | log-lin")
      ->capture_default_str();
  sub->add_option("--seed", opt->seed, "Split seed")->capture_default_str();
  sub->callback([opt]() {
    std::ifstream in(opt->cases);
    if (!in) throw std::runtime_error("cannot open " + opt->cases);
    const std::vector<RevisionCase> cases = read_cases_jsonl(in);
    const FeaturizedSplits f = featurize_cases(
        cases, scaling_kind_from_string(opt->scaling), opt->seed);
    const std::filesystem::path dir = opt->out_dir;
    std::filesystem::create_directories(dir);
    f.vocab.save(dir / "vocab.tsv");
    f.scaling.save(dir / "scaling.txt");
    save_instances(dir / "train.dat", f.train);
    save_instances(dir / "valid.dat", f.valid);
    save_instances(dir / "test.dat", f.test);
    std::cerr << "featurize: " << f.vocab.word_count() << " words, "
              << f.vocab.feature_count() << " feature slots; split "
              << f.train.size() << "/" << f.valid.size() << "/"
              << f.test.size() << '\n';
  });
}

void setup_split(CLI::App& app) {
  struct Opts {
    std::string data;
    std::string out_dir = ".";
    std::uint64_t seed = 42;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "split", "Randomly partition an instance file 50/25/25");
  sub->add_option("--data", opt->data, "Instance file")->required();
  sub->add_option("--out-dir", opt->out_dir, "Output directory")
      ->capture_default_str();
  sub->add_option("--seed", opt->seed, "Split seed")->capture_default_str();
  sub->callback([opt]() {
    const std::vector<LabeledInstance> data = load_instances(opt->data);
    SplitSpec spec;
    spec.seed = opt->seed;
    const SplitIndices idx = split_indices(data.size(), spec);
    const auto [train, valid, test] = apply_split(data, idx);
    const std::filesystem::path dir = opt->out_dir;
    std::filesystem::create_directories(dir);
    save_instances(dir / "train.dat", train);
    save_instances(dir / "valid.dat", valid);
    save_instances(dir / "test.dat", test);
    std::cerr << "split: " << train.size() << "/" << valid.size() << "/"
              << test.size() << '\n';
  });
}

void setup_train(CLI::App& app) {
  struct Opts {
    std::string train;
    std::string model_out = "model.txt";
    std::string scaling = "binary";
    double c = 1.0;
    double bias = 1.0;
    double tolerance = 1e-4;
    int max_iterations = 1000;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "train", "Train a logistic model on an instance file");
  sub->add_option("--train", opt->train, "Training instance file")
      ->required();
  sub->add_option("--model-out", opt->model_out, "Model output path")
      ->capture_default_str();
  sub->add_option("--scaling", opt->scaling,
                  "Scaling recorded in the model (atan | binary | log-lin)")
      ->capture_default_str();
  sub->add_option("--c-value", opt->c, "Loss penalty C")
      ->capture_default_str();
  sub->add_option("--bias", opt->bias,
                  "Bias feature value (<= 0 disables the bias)")
      ->capture_default_str();
  sub->add_option("--tolerance", opt->tolerance, "Gradient-norm tolerance")
      ->capture_default_str();
  sub->add_option("--max-iterations", opt->max_iterations,
                  "Outer iteration cap")
      ->capture_default_str();
  sub->callback([opt]() {
    const std::vector<LabeledInstance> data = load_instances(opt->train);
    TrainConfig cfg;
    cfg.c = opt->c;
    cfg.bias_value = opt->bias;
    cfg.tolerance = opt->tolerance;
    cfg.max_iterations = opt->max_iterations;
    LinearModel model = train(data, 0, cfg);
    model.scaling = scaling_kind_from_string(opt->scaling);
    save_model(opt->model_out, model);
    std::cerr << "train: " << data.size() << " instances, "
              << model.n_features << " features -> " << opt->model_out
              << '\n';
  });
}

void setup_sweep(CLI::App& app) {
  struct Opts {
    std::string train, valid;
    std::string out = "sweep.csv";
    std::string c_values;
    double bias = 1.0;
    double tolerance = 1e-4;
    int max_iterations = 1000;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "sweep", "Train across a penalty grid and score both splits");
  sub->add_option("--train", opt->train, "Training instance file")
      ->required();
  sub->add_option("--valid", opt->valid, "Validation instance file")
      ->required();
  sub->add_option("--out", opt->out, "Sweep CSV output")
      ->capture_default_str();
  sub->add_option("--c-values", opt->c_values,
                  "Comma-separated penalties (default 2^-5..2^11)");
  sub->add_option("--bias", opt->bias, "Bias feature value")
      ->capture_default_str();
  sub->add_option("--tolerance", opt->tolerance, "Gradient-norm tolerance")
      ->capture_default_str();
  sub->add_option("--max-iterations", opt->max_iterations,
                  "Outer iteration cap")
      ->capture_default_str();
  sub->callback([opt]() {
    const std::vector<LabeledInstance> train = load_instances(opt->train);
    const std::vector<LabeledInstance> valid = load_instances(opt->valid);
    const std::int32_t n_features = std::max(infer_feature_count(train),
                                             infer_feature_count(valid));
    TrainConfig base;
    base.bias_value = opt->bias;
    base.tolerance = opt->tolerance;
    base.max_iterations = opt->max_iterations;
    const std::vector<double> cs = opt->c_values.empty()
                                       ? default_c_values()
                                       : parse_c_list(opt->c_values);
    const SweepResult sweep =
        sweep_c(train, valid, n_features, cs, base, &std::cerr);
    std::ofstream out = open_out(opt->out);
    write_sweep_csv(out, sweep);
    if (sweep.best_calibrated) {
      std::cerr << "sweep: best c "
                << format_g9(sweep.rows[*sweep.best_calibrated].c)
                << " by calibrated validation RMSE\n";
    } else {
      throw std::runtime_error("every penalty value failed to train");
    }
  });
}

void setup_calibrate(CLI::App& app) {
  struct Opts {
    std::string model;
    std::string train;
    std::string model_out;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "calibrate",
      "Fit an isotonic probability map on training predictions");
  sub->add_option("--model", opt->model, "Model path")->required();
  sub->add_option("--train", opt->train, "Training instance file")
      ->required();
  sub->add_option("--model-out", opt->model_out,
                  "Output path (defaults to overwriting --model)");
  sub->callback([opt]() {
    LinearModel model = load_model(opt->model);
    const std::vector<LabeledInstance> data = load_instances(opt->train);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const LabeledInstance& inst : data) {
      scores.push_back(model.predict_raw(inst.features));
      labels.push_back(inst.label > 0);
    }
    model.calibration = fit_pav(scores, labels, &std::cerr);
    const std::string out =
        opt->model_out.empty() ? opt->model : opt->model_out;
    save_model(out, model);
    std::cerr << "calibrate: " << data.size() << " instances -> " << out
              << '\n';
  });
}

void setup_evaluate(CLI::App& app) {
  struct Opts {
    std::string model, data;
    double threshold = 0.5;
    bool raw = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "evaluate", "Score a model on an instance file (JSON to stdout)");
  sub->add_option("--model", opt->model, "Model path")->required();
  sub->add_option("--data", opt->data, "Instance file")->required();
  sub->add_option("--threshold", opt->threshold,
                  "Classification threshold on the probability")
      ->capture_default_str();
  sub->add_flag("--raw", opt->raw, "Skip the calibration map");
  sub->callback([opt]() {
    const LinearModel model = load_model(opt->model);
    const std::vector<LabeledInstance> data = load_instances(opt->data);
    const PredictionSet preds = predict_set(model, data, opt->raw);
    const ConfusionMatrix cm = confusion_at(preds, opt->threshold);
    nlohmann::json m;
    m["instances"] = data.size();
    m["calibrated"] = !opt->raw;
    m["threshold"] = opt->threshold;
    m["rmse"] = rmse(preds);
    m["one_minus_rmse"] = 1.0 - rmse(preds);
    m["accuracy"] = accuracy_at(preds, opt->threshold);
    m["auc_roc"] = auc_roc(preds);
    m["auc_pr"] = auc_pr(preds);
    m["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn},
                      {"fn", cm.fn}};
    m["reliability_mad"] = reliability_mad(reliability_bins(preds));
    std::cout << m.dump(2) << '\n';
  });
}

void setup_threshold(CLI::App& app) {
  struct Opts {
    std::string model, data;
    double cost_fp = 4.0;
    double cost_fn = 1.0;
    std::string sweep_out;
    bool raw = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "threshold",
      "Compare cost-optimal thresholds (theoretical vs. empirical)");
  sub->add_option("--model", opt->model, "Model path")->required();
  sub->add_option("--data", opt->data, "Instance file")->required();
  sub->add_option("--cost-fp", opt->cost_fp, "False-positive cost")
      ->capture_default_str();
  sub->add_option("--cost-fn", opt->cost_fn, "False-negative cost")
      ->capture_default_str();
  sub->add_option("--cost-sweep-out", opt->sweep_out,
                  "CSV sweeping the FP cost from 1 to 50");
  sub->add_flag("--raw", opt->raw, "Skip the calibration map");
  sub->callback([opt]() {
    const LinearModel model = load_model(opt->model);
    const std::vector<LabeledInstance> data = load_instances(opt->data);
    const PredictionSet preds = predict_set(model, data, opt->raw);
    const CostMatrix costs{opt->cost_fn, opt->cost_fp};
    const double thr = theoretical_threshold(costs);
    const double thr_cost = total_cost(confusion_at(preds, thr), costs);
    const ThresholdCost emp = empirical_threshold(preds, costs);
    nlohmann::json m;
    m["cost_fp"] = opt->cost_fp;
    m["cost_fn"] = opt->cost_fn;
    m["theoretical_threshold"] = thr;
    m["theoretical_cost"] = thr_cost;
    m["empirical_threshold"] = emp.threshold;
    m["empirical_cost"] = emp.cost;
    std::cout << m.dump(2) << '\n';
    if (!opt->sweep_out.empty()) {
      std::ofstream out = open_out(opt->sweep_out);
      out << "cost_fp,theoretical_threshold,theoretical_cost,"
             "empirical_threshold,empirical_cost\n";
      for (int c10 = 1; c10 <= 50; ++c10) {
        const CostMatrix cm{opt->cost_fn, static_cast<double>(c10)};
        if (cm.c10 <= cm.c01) continue;  // formula needs c10 > c01
        const double t = theoretical_threshold(cm);
        const ThresholdCost e = empirical_threshold(preds, cm);
        out << c10 << ',' << format_g9(t) << ','
            << format_g9(total_cost(confusion_at(preds, t), cm)) << ','
            << format_g9(e.threshold) << ',' << format_g9(e.cost) << '\n';
      }
    }
  });
}

void setup_learning_curve(CLI::App& app) {
  struct Opts {
    std::string train, valid;
    std::string out = "learning_curve.csv";
    std::string sizes;
    double c = 1.0;
    double bias = 1.0;
    double tolerance = 1e-4;
    int max_iterations = 1000;
    std::uint64_t seed = 42;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "learning-curve",
      "Validation 1-RMSE vs. training-set size (10 subsamples per size)");
  sub->add_option("--train", opt->train, "Training instance file")
      ->required();
  sub->add_option("--valid", opt->valid, "Validation instance file")
      ->required();
  sub->add_option("--out", opt->out, "Curve CSV output")
      ->capture_default_str();
  sub->add_option("--sizes", opt->sizes,
                  "Comma-separated sizes (default powers of 10)");
  sub->add_option("--c-value", opt->c, "Loss penalty C")
      ->capture_default_str();
  sub->add_option("--bias", opt->bias, "Bias feature value")
      ->capture_default_str();
  sub->add_option("--tolerance", opt->tolerance, "Gradient-norm tolerance")
      ->capture_default_str();
  sub->add_option("--max-iterations", opt->max_iterations,
                  "Outer iteration cap")
      ->capture_default_str();
  sub->add_option("--seed", opt->seed, "Sampling seed")
      ->capture_default_str();
  sub->callback([opt]() {
    const std::vector<LabeledInstance> train = load_instances(opt->train);
    const std::vector<LabeledInstance> valid = load_instances(opt->valid);
    const std::int32_t n_features = std::max(infer_feature_count(train),
                                             infer_feature_count(valid));
    TrainConfig cfg;
    cfg.c = opt->c;
    cfg.bias_value = opt->bias;
    cfg.tolerance = opt->tolerance;
    cfg.max_iterations = opt->max_iterations;
    std::vector<std::size_t> sizes;
    if (!opt->sizes.empty()) {
      for (double v : parse_c_list(opt->sizes)) {
        sizes.push_back(static_cast<std::size_t>(v));
      }
    }
    const std::vector<LearningCurvePoint> curve = learning_curve(
        train, valid, n_features, cfg, opt->seed, &std::cerr, sizes);
    std::ofstream out = open_out(opt->out);
    write_learning_curve_csv(out, curve);
    std::cerr << "learning-curve: " << curve.size() << " sizes -> "
              << opt->out << '\n';
  });
}

void setup_reliability(CLI::App& app) {
  struct Opts {
    std::string model, data;
    std::string out = "reliability.csv";
    bool raw = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "reliability", "10-bin reliability diagram data");
  sub->add_option("--model", opt->model, "Model path")->required();
  sub->add_option("--data", opt->data, "Instance file")->required();
  sub->add_option("--out", opt->out, "CSV output")->capture_default_str();
  sub->add_flag("--raw", opt->raw, "Skip the calibration map");
  sub->callback([opt]() {
    const LinearModel model = load_model(opt->model);
    const std::vector<LabeledInstance> data = load_instances(opt->data);
    const PredictionSet preds = predict_set(model, data, opt->raw);
    const auto bins = reliability_bins(preds);
    std::ofstream out = open_out(opt->out);
    write_reliability_csv(out, bins);
    std::cerr << "reliability: mean |bin deviation| = "
              << format_g9(reliability_mad(bins)) << '\n';
  });
}

void setup_curve_command(CLI::App& app, const std::string& name,
                         const std::string& help, bool roc) {
  struct Opts {
    std::string model, data, out;
    bool raw = false;
  };
  auto opt = std::make_shared<Opts>();
  opt->out = name + ".csv";
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--model", opt->model, "Model path")->required();
  sub->add_option("--data", opt->data, "Instance file")->required();
  sub->add_option("--out", opt->out, "CSV output")->capture_default_str();
  sub->add_flag("--raw", opt->raw, "Skip the calibration map");
  sub->callback([opt, roc]() {
    const LinearModel model = load_model(opt->model);
    const std::vector<LabeledInstance> data = load_instances(opt->data);
    const PredictionSet preds = predict_set(model, data, opt->raw);
    std::ofstream out = open_out(opt->out);
    if (roc) {
      write_roc_csv(out, roc_points(preds));
      std::cerr << "roc: area " << format_g9(auc_roc(preds)) << '\n';
    } else {
      write_pr_csv(out, pr_points(preds));
      std::cerr << "pr: area " << format_g9(auc_pr(preds)) << '\n';
    }
  });
}

void setup_run(CLI::App& app) {
  struct Opts {
    std::string config;
    std::optional<std::string> corpus, out_dir, scaling, c_values;
    std::optional<std::uint64_t> seed;
    std::optional<double> cost_fp, rate;
    std::optional<int> pages;
    bool deterministic = false;
    bool with_curve = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "run", "Full experiment: ingest, featurize, sweep, calibrate, report");
  sub->add_option("--config", opt->config, "Config file (key = value lines)");
  sub->add_option("--corpus", opt->corpus,
                  "Dump path (omit to generate a synthetic corpus)");
  sub->add_option("--out-dir", opt->out_dir, "Artifact directory");
  sub->add_option("--scaling", opt->scaling, "atan | binary | log-lin");
  sub->add_option("--c-values", opt->c_values, "Comma-separated penalties");
  sub->add_option("--seed", opt->seed, "Experiment seed");
  sub->add_option("--cost-fp", opt->cost_fp, "False-positive cost");
  sub->add_option("--pages", opt->pages, "Synthetic corpus pages");
  sub->add_option("--rate", opt->rate, "Synthetic vandalism rate");
  sub->add_flag("--deterministic", opt->deterministic,
                "Record the determinism guarantee in the report");
  sub->add_flag("--learning-curve", opt->with_curve,
                "Also compute the learning curve");
  sub->callback([opt]() {
    RunConfig cfg;
    if (!opt->config.empty()) cfg = RunConfig::from_file(opt->config);
    if (opt->corpus) cfg.corpus = *opt->corpus;
    if (opt->out_dir) cfg.out_dir = *opt->out_dir;
    if (opt->scaling) cfg.scaling = scaling_kind_from_string(*opt->scaling);
    if (opt->c_values) cfg.c_values = parse_c_list(*opt->c_values);
    if (opt->seed) cfg.seed = *opt->seed;
    if (opt->cost_fp) cfg.cost_fp = *opt->cost_fp;
    if (opt->pages) cfg.synth.pages = *opt->pages;
    if (opt->rate) cfg.synth.vandalism_rate = *opt->rate;
    if (opt->deterministic) cfg.deterministic = true;
    if (opt->with_curve) cfg.with_learning_curve = true;
    const RunResult result = run_experiment(cfg, std::cerr);
    std::cerr << "run: validation AUC-ROC "
              << format_g9(result.valid_auc_roc) << ", train RMSE "
              << format_g9(result.train_rmse) << " raw / "
              << format_g9(result.train_rmse_calibrated)
              << " calibrated -> "
              << result.metrics_path.generic_string() << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bag-of-words vandalism detector for wiki revision histories"};
  app.require_subcommand(1);
  setup_synth(app);
  setup_ingest(app);
  setup_tokenize(app);
  setup_featurize(app);
  setup_split(app);
  setup_train(app);
  setup_sweep(app);
  setup_calibrate(app);
  setup_evaluate(app);
  setup_threshold(app);
  setup_learning_curve(app);
  setup_reliability(app);
  setup_curve_command(app, "roc", "ROC curve points", true);
  setup_curve_command(app, "pr", "Precision-recall curve points", false);
  setup_run(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "vandet: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

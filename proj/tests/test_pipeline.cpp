#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vandet/eval.hpp"
#include "vandet/ingest.hpp"
#include "vandet/model.hpp"
#include "vandet/pipeline.hpp"
#include "vandet/rng.hpp"
#include "vandet/synth.hpp"

using namespace vandet;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<LabeledInstance> toy_instances(Rng& rng, int n, int n_features) {
  // Labels carry a planted linear signal so training has something to learn.
  std::vector<LabeledInstance> out;
  for (int i = 0; i < n; ++i) {
    std::vector<SparseEntry> entries;
    double signal = 0;
    for (int f = 0; f < n_features; ++f) {
      if (rng.bernoulli(0.6)) {
        const double v = rng.uniform01();
        entries.push_back({f, v});
        signal += (f % 2 ? v : -v);
      }
    }
    LabeledInstance inst;
    inst.features = SparseVector::from_entries(std::move(entries));
    inst.label = signal + (rng.uniform01() - 0.5) > 0 ? 1 : -1;
    out.push_back(std::move(inst));
  }
  return out;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

long total_entries(const std::vector<LabeledInstance>& instances) {
  long n = 0;
  for (const auto& inst : instances) n += static_cast<long>(inst.features.size());
  return n;
}

}  // namespace

TEST_CASE("splitting follows the floor and remainder rules") {
  SplitSpec spec;
  spec.seed = 1;
  auto idx = split_indices(100, spec);
  CHECK(idx.train.size() == 50);
  CHECK(idx.valid.size() == 25);
  CHECK(idx.test.size() == 25);

  idx = split_indices(101, spec);
  CHECK(idx.train.size() == 50);
  CHECK(idx.valid.size() == 25);
  CHECK(idx.test.size() == 26);  // the remainder lands in test

  idx = split_indices(4, spec);
  CHECK(idx.train.size() == 2);
  CHECK(idx.valid.size() == 1);
  CHECK(idx.test.size() == 1);
}

TEST_CASE("a split is a partition of the input indices") {
  SplitSpec spec;
  spec.seed = 77;
  const auto idx = split_indices(137, spec);
  std::vector<std::size_t> all;
  all.insert(all.end(), idx.train.begin(), idx.train.end());
  all.insert(all.end(), idx.valid.begin(), idx.valid.end());
  all.insert(all.end(), idx.test.begin(), idx.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> want(137);
  std::iota(want.begin(), want.end(), std::size_t{0});
  CHECK(all == want);
}

TEST_CASE("splits are seed-deterministic and seed-sensitive") {
  SplitSpec spec;
  spec.seed = 5;
  const auto a = split_indices(60, spec);
  const auto b = split_indices(60, spec);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  spec.seed = 6;
  CHECK(split_indices(60, spec).train != a.train);
}

TEST_CASE("degenerate splits are rejected") {
  SplitSpec spec;
  CHECK_THROWS(split_indices(3, spec));
  spec.train_frac = 0.6;  // no longer sums to 1
  CHECK_THROWS(split_indices(100, spec));
}

TEST_CASE("apply_split carries items to their partitions") {
  std::vector<int> items = {10, 11, 12, 13, 14, 15, 16, 17};
  SplitIndices idx;
  idx.train = {0, 2};
  idx.valid = {1, 3};
  idx.test = {4, 5, 6, 7};
  const auto [train, valid, test] = apply_split(items, idx);
  CHECK(train == std::vector<int>{10, 12});
  CHECK(valid == std::vector<int>{11, 13});
  CHECK(test == std::vector<int>{14, 15, 16, 17});
}

TEST_CASE("the default penalty grid spans the documented powers of two") {
  const auto cs = default_c_values();
  REQUIRE(cs.size() == 17);
  CHECK(cs.front() == 0.03125);
  CHECK(cs.back() == 2048.0);
  CHECK(std::is_sorted(cs.begin(), cs.end()));
  for (std::size_t i = 1; i < cs.size(); ++i) CHECK(cs[i] == 2 * cs[i - 1]);
}

TEST_CASE("a single-value sweep equals a direct train and evaluate") {
  Rng rng(41);
  const auto train_set = toy_instances(rng, 120, 8);
  const auto valid_set = toy_instances(rng, 60, 8);
  TrainConfig base;
  const SweepResult sweep = sweep_c(train_set, valid_set, 8, {1.0}, base);
  REQUIRE(sweep.rows.size() == 1);
  REQUIRE(sweep.best_calibrated.has_value());
  const SweepRow& row = sweep.rows[0];
  CHECK_FALSE(row.failed);

  TrainConfig cfg = base;
  cfg.c = 1.0;
  const LinearModel model = train(train_set, 8, cfg);
  PredictionSet train_preds, valid_preds;
  std::vector<double> scores;
  std::vector<int> labels01;
  for (const auto& inst : train_set) {
    const double p = model.predict_raw(inst.features);
    scores.push_back(p);
    labels01.push_back(inst.label > 0);
    train_preds.probs.push_back(p);
    train_preds.labels.push_back(inst.label > 0);
  }
  for (const auto& inst : valid_set) {
    valid_preds.probs.push_back(model.predict_raw(inst.features));
    valid_preds.labels.push_back(inst.label > 0);
  }
  CHECK(row.train_rmse == doctest::Approx(rmse(train_preds)).epsilon(1e-12));
  CHECK(row.valid_rmse == doctest::Approx(rmse(valid_preds)).epsilon(1e-12));

  const IsotonicMap map = fit_pav(scores, labels01);
  PredictionSet cal = train_preds;
  for (double& p : cal.probs) p = map(p);
  CHECK(row.train_rmse_calibrated ==
        doctest::Approx(rmse(cal)).epsilon(1e-12));
  const ThresholdAccuracy best = best_accuracy_threshold(cal);
  CHECK(row.best_threshold == best.threshold);
}

TEST_CASE("sweeping a separable pair converges at every penalty") {
  const std::vector<LabeledInstance> train_set = {
      {SparseVector::from_entries({{0, 1.0}}), 1},
      {SparseVector::from_entries({{0, -1.0}}), -1},
  };
  const SweepResult sweep =
      sweep_c(train_set, train_set, 1, default_c_values(), TrainConfig{});
  REQUIRE(sweep.rows.size() == 17);
  for (const SweepRow& row : sweep.rows) CHECK_FALSE(row.failed);
  // More latitude for the loss term fits the training pair monotonically
  // better.
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    CHECK(sweep.rows[i].train_rmse <= sweep.rows[i - 1].train_rmse + 1e-12);
  }
}

TEST_CASE("sweep selection prefers the smallest tied penalty") {
  // Two instances that cannot be separated: every penalty gives the same
  // calibrated RMSE, so the first (smallest) penalty must win.
  const std::vector<LabeledInstance> train_set = {
      {SparseVector::from_entries({{0, 1.0}}), 1},
      {SparseVector::from_entries({{0, 1.0}}), -1},
  };
  const SweepResult sweep =
      sweep_c(train_set, train_set, 1, {0.5, 1.0, 2.0}, TrainConfig{});
  REQUIRE(sweep.best_calibrated.has_value());
  CHECK(*sweep.best_calibrated == 0);
  CHECK(sweep.rows[0].c == 0.5);
}

TEST_CASE("sweep validates its penalty grid") {
  Rng rng(42);
  const auto data = toy_instances(rng, 20, 4);
  CHECK_THROWS(sweep_c(data, data, 4, {}, TrainConfig{}));
  CHECK_THROWS(sweep_c(data, data, 4, {-1.0, 1.0}, TrainConfig{}));
  CHECK_THROWS(sweep_c({}, data, 4, {1.0}, TrainConfig{}));
}

TEST_CASE("learning curve sizes default to powers of ten plus full size") {
  Rng rng(43);
  const auto train_set = toy_instances(rng, 250, 6);
  const auto valid_set = toy_instances(rng, 80, 6);
  TrainConfig cfg;
  const auto curve = learning_curve(train_set, valid_set, 6, cfg, 9);
  REQUIRE(curve.size() == 3);  // 10, 100, 250
  CHECK(curve[0].size == 10);
  CHECK(curve[1].size == 100);
  CHECK(curve[2].size == 250);
  CHECK(curve[0].iterations == 10);
  CHECK(curve[1].iterations == 10);
  CHECK(curve[2].iterations == 1);   // the full set runs once
  CHECK(curve[2].stddev == 0.0);
  CHECK_FALSE(curve[2].clamped);
  for (const auto& p : curve) {
    CHECK(p.mean_one_minus_rmse > 0.0);
    CHECK(p.mean_one_minus_rmse < 1.0);
    CHECK(p.stddev >= 0.0);
  }
}

TEST_CASE("oversized curve requests are clamped and flagged") {
  Rng rng(44);
  const auto train_set = toy_instances(rng, 50, 4);
  const auto valid_set = toy_instances(rng, 30, 4);
  const auto curve =
      learning_curve(train_set, valid_set, 4, TrainConfig{}, 1, nullptr,
                     {10, 500});
  REQUIRE(curve.size() == 2);
  CHECK(curve[1].size == 50);
  CHECK(curve[1].clamped);
  CHECK(curve[1].iterations == 1);
}

TEST_CASE("learning curves are seed-deterministic") {
  Rng rng(45);
  const auto train_set = toy_instances(rng, 120, 5);
  const auto valid_set = toy_instances(rng, 60, 5);
  const auto a = learning_curve(train_set, valid_set, 5, TrainConfig{}, 31);
  const auto b = learning_curve(train_set, valid_set, 5, TrainConfig{}, 31);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_one_minus_rmse == b[i].mean_one_minus_rmse);
    CHECK(a[i].stddev == b[i].stddev);
  }
}

TEST_CASE("config files parse with comments and defaults") {
  std::istringstream in(R"(# experiment configuration
scaling = atan
seed = 99
c_values = 0.5, 1, 2
pages = 123
learning_curve = true

deterministic = yes
)");
  const RunConfig cfg = RunConfig::parse(in);
  CHECK(cfg.scaling == ScalingKind::kAtan);
  CHECK(cfg.seed == 99);
  CHECK(cfg.c_values == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(cfg.synth.pages == 123);
  CHECK(cfg.with_learning_curve);
  CHECK(cfg.deterministic);
  CHECK(cfg.cost_fp == 4.0);       // untouched default
  CHECK(cfg.revert_window == 10);  // untouched default
}

TEST_CASE("unknown config keys are rejected with a line number") {
  std::istringstream in("seed = 1\nmystery = 2\n");
  try {
    RunConfig::parse(in);
    FAIL("expected a parse failure");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mystery") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("the canonical rendering round-trips and skips the output dir") {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.scaling = ScalingKind::kLogLin;
  cfg.out_dir = "/some/where/else";
  cfg.c_values = {0.25, 4.0};
  const std::string canonical = cfg.canonical_text();
  CHECK(canonical.find("/some/where") == std::string::npos);

  std::istringstream in(canonical);
  const RunConfig back = RunConfig::parse(in);
  CHECK(back.canonical_text() == canonical);
  CHECK(back.seed == cfg.seed);
  CHECK(back.scaling == cfg.scaling);
  CHECK(back.c_values == cfg.c_values);
}

TEST_CASE("config hashes are stable and sensitive") {
  RunConfig a, b;
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.config_hash().size() == 16);
  CHECK(a.config_hash().find_first_not_of("0123456789abcdef") ==
        std::string::npos);
  b.seed = a.seed + 1;
  CHECK(a.config_hash() != b.config_hash());
  // The output directory must not affect the hash.
  RunConfig c;
  c.out_dir = "elsewhere";
  CHECK(c.config_hash() == a.config_hash());
}

TEST_CASE("an end-to-end run writes the full artifact set") {
  const auto dir = temp_dir("vandet_run_smoke");
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.seed = 17;
  cfg.synth.pages = 120;
  std::ostringstream log;
  const RunResult result = run_experiment(cfg, log);

  for (const char* name :
       {"corpus.xml", "truth.jsonl", "cases.jsonl", "vocab.tsv",
        "scaling.txt", "train.dat", "valid.dat", "test.dat", "sweep.csv",
        "model.txt", "metrics.json", "roc_valid.csv", "pr_valid.csv",
        "roc_test.csv", "pr_test.csv", "reliability_train_raw.csv",
        "reliability_train_calibrated.csv", "config.txt"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "FAILED"));
  CHECK_FALSE(std::filesystem::exists(dir / "learning_curve.csv"));

  const nlohmann::json m = load_json(result.metrics_path);
  CHECK(m.at("schema_version") == 1);
  CHECK(m.at("config_hash") == cfg.config_hash());
  for (const char* key :
       {"rmse", "rmse_calibrated", "one_minus_rmse_calibrated", "accuracy",
        "auc_roc", "auc_pr"}) {
    CHECK(m.at("valid").contains(key));
  }
  CHECK(m.at("test").contains("confusion"));
  CHECK(m.at("test").at("confusion").contains("tp"));
  CHECK(m.at("counts").at("cases").get<long>() > 0);
  CHECK(m.at("sweep").size() == 17);

  // The saved model must reproduce the reported validation numbers.
  const LinearModel model = load_model(result.model_path);
  REQUIRE(model.calibration.has_value());
  const auto valid_set = load_instances(dir / "valid.dat");
  PredictionSet preds;
  for (const auto& inst : valid_set) {
    preds.probs.push_back(model.predict(inst.features));
    preds.labels.push_back(inst.label > 0);
  }
  CHECK(rmse(preds) ==
        doctest::Approx(m.at("valid").at("rmse_calibrated").get<double>())
            .epsilon(1e-12));
  CHECK(auc_roc(preds) ==
        doctest::Approx(m.at("valid").at("auc_roc").get<double>())
            .epsilon(1e-12));
  std::filesystem::remove_all(dir);
}

TEST_CASE("every artifact embeds the config hash for provenance") {
  const auto dir = temp_dir("vandet_run_prov");
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.seed = 23;
  cfg.synth.pages = 60;
  std::ostringstream log;
  run_experiment(cfg, log);
  const std::string needle = "config " + cfg.config_hash();
  for (const char* name : {"vocab.tsv", "scaling.txt", "train.dat",
                           "sweep.csv", "model.txt", "config.txt"}) {
    std::ifstream in(dir / name);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line.find(needle) != std::string::npos);
  }
  const nlohmann::json m = load_json(dir / "metrics.json");
  CHECK(m.at("config_hash").get<std::string>() == cfg.config_hash());
  std::filesystem::remove_all(dir);
}

TEST_CASE("learning curves appear when requested") {
  const auto dir = temp_dir("vandet_run_curve");
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.seed = 29;
  cfg.synth.pages = 60;
  cfg.with_learning_curve = true;
  cfg.c_values = {1.0};  // keep it quick
  std::ostringstream log;
  const RunResult result = run_experiment(cfg, log);
  CHECK(std::filesystem::exists(dir / "learning_curve.csv"));
  CHECK_FALSE(result.curve.empty());
  const nlohmann::json m = load_json(dir / "metrics.json");
  CHECK(m.contains("learning_curve"));
  CHECK(m.at("learning_curve").size() == result.curve.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("dropping ratio slots roughly halves the stored dataset") {
  const auto corpus_dir = temp_dir("vandet_scaling_compare");
  const auto corpus = corpus_dir / "corpus.xml";
  SynthParams params;
  params.pages = 150;
  params.seed = 31;
  synth_corpus_files(params, corpus, corpus_dir / "truth.jsonl");

  auto run_with = [&](ScalingKind kind, const std::string& sub) {
    RunConfig cfg;
    cfg.corpus = corpus;
    cfg.out_dir = corpus_dir / sub;
    cfg.scaling = kind;
    cfg.seed = 31;
    cfg.c_values = {1.0};
    std::ostringstream log;
    run_experiment(cfg, log);
    return total_entries(load_instances(cfg.out_dir / "train.dat"));
  };
  const long atan_entries = run_with(ScalingKind::kAtan, "atan");
  const long binary_entries = run_with(ScalingKind::kBinary, "binary");
  CHECK(binary_entries < atan_entries);
  const double ratio =
      static_cast<double>(binary_entries) / static_cast<double>(atan_entries);
  // Word slots halve exactly; the shared metadata block keeps the overall
  // ratio a little above one half.
  CHECK(ratio > 0.45);
  CHECK(ratio < 0.75);
  std::filesystem::remove_all(corpus_dir);
}

TEST_CASE("stage failures leave a tagged marker") {
  const auto dir = temp_dir("vandet_run_fail");
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.corpus = dir / "no_such_corpus.xml";
  std::ostringstream log;
  try {
    run_experiment(cfg, log);
    FAIL("expected a stage failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("[ingest]") == 0);
  }
  REQUIRE(std::filesystem::exists(dir / "FAILED"));
  std::ifstream marker(dir / "FAILED");
  std::string contents;
  std::getline(marker, contents);
  CHECK(contents.find("[ingest]") == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("instance files round trip through their text format") {
  Rng rng(46);
  const auto instances = toy_instances(rng, 40, 12);
  std::ostringstream out;
  write_instances(out, instances);
  std::istringstream in(out.str());
  const auto back = read_instances(in);
  REQUIRE(back.size() == instances.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].label == instances[i].label);
    REQUIRE(back[i].features.size() == instances[i].features.size());
  }
  CHECK(infer_feature_count(instances) <= 12);
}

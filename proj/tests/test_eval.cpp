// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <adlr/experiment.hpp>
#include <adlr/metrics.hpp>
#include <adlr/pca.hpp>
#include <adlr/synth.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

using namespace adlr;

namespace {

// Direct TP/FP/FN counting, independent of the metrics implementation.
struct OracleReport {
  std::vector<double> precision, recall, f1;
  std::vector<int64_t> support;
  double accuracy = 0.0;
};

OracleReport metrics_oracle(const std::vector<int>& truth,
                            const std::vector<int>& pred, int n) {
  OracleReport r;
  r.precision.assign(n, 0.0);
  r.recall.assign(n, 0.0);
  r.f1.assign(n, 0.0);
  r.support.assign(n, 0);
  int64_t correct = 0;
  for (int c = 0; c < n; ++c) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c && pred[i] == c) ++tp;
      if (truth[i] != c && pred[i] == c) ++fp;
      if (truth[i] == c && pred[i] != c) ++fn;
      if (c == 0 && truth[i] == pred[i]) ++correct;
    }
    r.support[c] = tp + fn;
    r.precision[c] = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
    r.recall[c] = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
    r.f1[c] = (r.precision[c] + r.recall[c]) == 0.0
                  ? 0.0
                  : 2.0 * r.precision[c] * r.recall[c] /
                        (r.precision[c] + r.recall[c]);
  }
  r.accuracy = double(correct) / double(truth.size());
  return r;
}

std::vector<std::string> label_names(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("C" + std::to_string(i));
  return names;
}

}  // namespace

TEST_CASE("perfect predictions give all-ones metrics and a diagonal confusion") {
  std::vector<int> truth{0, 1, 2, 1, 0, 2, 2};
  auto report = metrics(truth, truth, label_names(3));
  CHECK(report.accuracy == 1.0);
  CHECK(report.macro_f1 == 1.0);
  CHECK(report.balanced_accuracy == 1.0);
  CHECK(report.weighted_f1 == 1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(report.confusion[i][j] == 0);
}

TEST_CASE("the two-class hand-computed case") {
  // Confusion [[2,0],[1,1]]: class0 P=2/3 R=1 F1=0.8; class1 P=1 R=0.5 F1=2/3.
  std::vector<int> truth{0, 0, 1, 1};
  std::vector<int> pred{0, 0, 0, 1};
  auto report = metrics(truth, pred, label_names(2));
  CHECK(report.confusion[0][0] == 2);
  CHECK(report.confusion[1][0] == 1);
  CHECK(report.confusion[1][1] == 1);
  CHECK(report.per_class[0].f1 == doctest::Approx(0.8));
  CHECK(report.per_class[1].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(report.macro_f1 == doctest::Approx(0.7333333333));
  CHECK(report.accuracy == doctest::Approx(0.75));
  CHECK(report.weighted_recall == doctest::Approx(report.accuracy));
}

TEST_CASE("zero-support classes contribute zero and are flagged by support") {
  std::vector<int> truth{0, 1, 0};
  std::vector<int> pred{0, 1, 1};
  auto report = metrics(truth, pred, label_names(3));
  CHECK(report.per_class[2].support == 0);
  CHECK(report.per_class[2].f1 == 0.0);
  // Macro runs over all three registry classes.
  const double expected_macro =
      (report.per_class[0].f1 + report.per_class[1].f1 + 0.0) / 3.0;
  CHECK(report.macro_f1 == doctest::Approx(expected_macro));
  // Balanced accuracy averages recall over present classes only.
  CHECK(report.balanced_accuracy ==
        doctest::Approx((report.per_class[0].recall + report.per_class[1].recall) /
                        2.0));
}

TEST_CASE("metrics matches the brute-force oracle on 1000 random instances") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng.bounded(5));
    const size_t n = 1 + rng.bounded(40);
    std::vector<int> truth(n), pred(n);
    for (size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.bounded(n_classes));
      pred[i] = static_cast<int>(rng.bounded(n_classes));
    }
    auto report = metrics(truth, pred, label_names(n_classes));
    auto oracle = metrics_oracle(truth, pred, n_classes);

    double macro_f1 = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      CHECK(report.per_class[c].precision == oracle.precision[c]);
      CHECK(report.per_class[c].recall == oracle.recall[c]);
      CHECK(report.per_class[c].f1 == oracle.f1[c]);
      CHECK(report.per_class[c].support == oracle.support[c]);
      macro_f1 += oracle.f1[c];
    }
    CHECK(report.macro_f1 == doctest::Approx(macro_f1 / n_classes).epsilon(1e-12));
    CHECK(report.accuracy == oracle.accuracy);
    // Support-weighted recall is accuracy, exactly.
    CHECK(report.weighted_recall == doctest::Approx(report.accuracy).epsilon(1e-12));

    // Confusion row sums equal supports.
    for (int c = 0; c < n_classes; ++c) {
      int64_t row = 0;
      for (int j = 0; j < n_classes; ++j) row += report.confusion[c][j];
      CHECK(row == report.per_class[c].support);
    }
  }
}

TEST_CASE("metrics rejects mismatched or empty inputs") {
  std::vector<int> a{0, 1}, b{0};
  CHECK_THROWS_AS(metrics(a, b, label_names(2)), UsageError);
  CHECK_THROWS_AS(metrics(std::vector<int>{}, std::vector<int>{}, label_names(2)),
                  UsageError);
}

TEST_CASE("summary aggregation uses the sample standard deviation") {
  CellResult a, b;
  a.variant = b.variant = Variant::GptAr;
  a.dataset = b.dataset = "d";
  a.seed = 0;
  b.seed = 1;
  a.report.macro_f1 = 0.8;
  b.report.macro_f1 = 0.9;
  a.report.balanced_accuracy = b.report.balanced_accuracy = 0.5;
  auto rows = summarize({a, b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n_seeds == 2);
  CHECK(rows[0].mean_f1 == doctest::Approx(0.85));
  CHECK(rows[0].std_f1 == doctest::Approx(0.0707106781));
}

TEST_CASE("PCA projects exactly onto a known 2-D subspace") {
  // Points lie in span{u, v} in 5-D; reconstruction must be exact.
  std::vector<double> u{1, 0, 1, 0, 1}, v{0, 1, 0, -1, 0};
  Rng rng(5);
  std::vector<std::vector<double>> points;
  for (int i = 0; i < 40; ++i) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-1, 1);
    std::vector<double> p(5);
    for (int j = 0; j < 5; ++j) p[j] = a * u[j] + b * v[j];
    points.push_back(std::move(p));
  }
  auto proj = project_2d(points);
  CHECK(proj.component_variance[0] >= proj.component_variance[1]);

  for (size_t i = 0; i < points.size(); ++i) {
    for (int j = 0; j < 5; ++j) {
      const double rec = proj.mean[j] + proj.coords[i][0] * proj.basis[0][j] +
                         proj.coords[i][1] * proj.basis[1][j];
      CHECK(rec == doctest::Approx(points[i][j]).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("activity embeddings average the per-token hidden states") {
  GptConfig cfg{.vocab_size = 10, .d_model = 8, .n_heads = 2, .n_layers = 1,
                .context_len = 8, .dropout_p = 0.0};
  Rng rng(3);
  GptModel<float> gpt(cfg, rng, false);

  TokenizedSequence single;
  single.token_ids = {4};
  single.hour_ids = {9};
  single.label_id = 0;
  single.source_label = "A";
  auto embs = embed_activities(gpt, {single});
  REQUIRE(embs.size() == 1);
  auto h = embed(gpt, single.token_ids);
  for (size_t c = 0; c < h.cols; ++c)
    CHECK(embs[0].mean_vector[c] == doctest::Approx(h.at(0, c)));

  CHECK_THROWS_AS(embed_activities(gpt, {}), UsageError);
}

TEST_CASE("run_experiment writes one report per cell and reruns byte-identically") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "adlr_experiment_test";
  fs::remove_all(dir);

  // A small separable dataset and a micro config keep this test quick.
  auto spec = scenario_separable();
  spec.n_days = 35;
  spec.activities_per_day = 3;
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  const auto data_path = dir / "separable.jsonl";
  fs::create_directories(dir);
  save_segmented(data_path.string(), segmented.sequences);

  ExperimentPlan plan;
  plan.variants = {Variant::BaselineBiLstm};
  plan.dataset_paths = {data_path.string()};
  plan.config.seeds = {0, 1};
  plan.config.gpt = {.vocab_size = 0, .d_model = 8, .n_heads = 2, .n_layers = 1,
                     .context_len = 16, .dropout_p = 0.1};
  plan.config.pretrain = {.lr = 3e-3, .batch_chunks = 8, .max_epochs = 1,
                          .patience = 2, .val_fraction = 0.2, .seed = 0};
  plan.config.train = {.lr = 5e-3, .batch_size = 16, .max_epochs = 3,
                       .patience = 3};
  plan.config.classifier.lstm_hidden = 8;
  plan.config.classifier.baseline_embed_dim = 8;

  auto run_once = [&](const std::string& out) {
    auto cells = run_experiment(plan, (dir / out).string());
    REQUIRE(cells.size() == 2);
    for (const auto& c : cells) CHECK(fs::exists(c.report_path));
    CHECK(fs::exists(dir / out / "summary.csv"));
    return cells;
  };
  auto first = run_once("run1");
  auto second = run_once("run2");

  // Reports are byte-identical once the wall-time field is stripped.
  for (size_t i = 0; i < first.size(); ++i) {
    auto strip = [](const std::string& path) {
      std::ifstream in(path);
      auto doc = nlohmann::json::parse(in);
      doc["run_meta"].erase("wall_time_sec");
      return doc.dump(2);
    };
    CHECK(strip(first[i].report_path) == strip(second[i].report_path));
  }

  // The summary recomputes identically from the stored per-seed reports.
  auto rows1 = summarize(first);
  auto rows2 = summarize(second);
  REQUIRE(rows1.size() == rows2.size());
  for (size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].mean_f1 == rows2[i].mean_f1);
    CHECK(rows1[i].std_f1 == rows2[i].std_f1);
  }
  fs::remove_all(dir);
}

TEST_CASE("hyperparam_search emits the full table and picks the best point") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "adlr_search_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto spec = scenario_separable();
  spec.n_days = 42;
  spec.activities_per_day = 2;
  auto segmented = segment_activities(parse_log_string(generate(spec)).events);
  const auto data_path = dir / "separable.jsonl";
  save_segmented(data_path.string(), segmented.sequences);

  ExperimentPlan plan;
  plan.variants = {Variant::GptAr};
  plan.dataset_paths = {data_path.string()};
  plan.config.seeds = {0};
  plan.config.gpt = {.vocab_size = 0, .d_model = 8, .n_heads = 2, .n_layers = 1,
                     .context_len = 16, .dropout_p = 0.1};
  plan.config.pretrain = {.lr = 3e-3, .batch_chunks = 8, .max_epochs = 1,
                          .patience = 1, .val_fraction = 0.2, .seed = 0};
  plan.config.train = {.lr = 5e-3, .batch_size = 16, .max_epochs = 2,
                       .patience = 2};
  plan.config.classifier.lstm_hidden = 8;

  SUBCASE("single-point grid selects that point") {
    auto result = hyperparam_search({{2, 1}}, plan, 3, (dir / "s1").string());
    CHECK(result.best.n_heads == 2);
    CHECK(result.best.n_layers == 1);
    CHECK(result.table.size() == 1);  // |grid| x |datasets|
    CHECK(fs::exists(dir / "s1" / "search.csv"));
    CHECK(fs::exists(dir / "s1" / "best.json"));
  }
  SUBCASE("two-point grid emits one row per point and dataset") {
    auto result = hyperparam_search({{2, 1}, {2, 2}}, plan, 3, (dir / "s2").string());
    CHECK(result.table.size() == 2);
    const bool best_in_grid = (result.best.n_layers == 1 || result.best.n_layers == 2);
    CHECK(best_in_grid);
  }
  fs::remove_all(dir);
}

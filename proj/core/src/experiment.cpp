// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adlr/bundle.hpp"
#include "serde.hpp"

namespace adlr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::GptAr: return "gptar";
    case Variant::BaselineBiLstm: return "baseline-bilstm";
    case Variant::GptArExtended: return "gptar-extended";
    case Variant::GptArExtendedSep: return "gptar-extended-sep";
    case Variant::GptHarNote: return "gpthar-note";
    case Variant::GptHar: return "gpthar";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::GptAr, Variant::BaselineBiLstm, Variant::GptArExtended,
                    Variant::GptArExtendedSep, Variant::GptHarNote, Variant::GptHar})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

std::vector<Variant> parse_variant_list(std::string_view csv) {
  std::vector<Variant> out;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    std::string_view item = csv.substr(
        pos, comma == std::string_view::npos ? csv.size() - pos : comma - pos);
    if (!item.empty()) {
      auto v = parse_variant(item);
      if (!v) throw UsageError("unknown variant '" + std::string(item) + "'");
      out.push_back(*v);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw UsageError("no variants given");
  return out;
}

namespace {

std::vector<std::vector<TokenizedSequence>> encode_buckets(
    const std::vector<WeekBucket>& weeks, const Vocabulary& vocab,
    const LabelRegistry& labels) {
  std::vector<std::vector<TokenizedSequence>> out;
  out.reserve(weeks.size());
  for (const auto& w : weeks) {
    std::vector<TokenizedSequence> bucket;
    bucket.reserve(w.sequences.size());
    for (const auto& s : w.sequences) bucket.push_back(encode(s, vocab, labels));
    out.push_back(std::move(bucket));
  }
  return out;
}

std::string split_id_of(const DatasetSplit& split, double ratio) {
  std::ostringstream os;
  os << "seed=" << split.seed << ";ratio=" << ratio << ";train=";
  for (const auto& w : split.train_weeks) os << w.week_index << ',';
  os << ";test=";
  for (const auto& w : split.test_weeks) os << w.week_index << ',';
  return fnv1a_hex(os.str());
}

}  // namespace

PreparedDataset prepare_dataset(const std::vector<ActivitySequence>& sequences,
                                const SplitSettings& split_settings,
                                double val_week_fraction, std::string path) {
  PreparedDataset ds;
  ds.path = std::move(path);
  ds.split = split_weeks(sequences, split_settings.train_ratio, split_settings.seed);
  ds.labels = LabelRegistry::from_sequences(sequences);

  const auto train_chrono = sequences_chronological(ds.split.train_weeks);
  ds.vocab = build_vocab(train_chrono);
  ds.pretrain_stream = corpus_stream(train_chrono, ds.vocab);

  auto [fit_weeks, val_weeks] =
      split_validation_weeks(ds.split.train_weeks, val_week_fraction);
  ds.train_buckets = encode_buckets(fit_weeks, ds.vocab, ds.labels);
  ds.val_buckets = encode_buckets(val_weeks, ds.vocab, ds.labels);
  ds.test_buckets = encode_buckets(ds.split.test_weeks, ds.vocab, ds.labels);
  ds.split_id = split_id_of(ds.split, split_settings.train_ratio);
  return ds;
}

std::vector<TokenizedSequence> flatten_single(
    const std::vector<std::vector<TokenizedSequence>>& buckets) {
  std::vector<TokenizedSequence> out;
  for (const auto& b : buckets) out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<TokenizedSequence> flatten_extended(
    const std::vector<std::vector<TokenizedSequence>>& buckets, bool with_sep,
    const Vocabulary& vocab) {
  std::vector<TokenizedSequence> out;
  for (const auto& b : buckets)
    for (size_t j = 0; j < b.size(); ++j)
      out.push_back(assemble_extended(b, j, with_sep, vocab));
  return out;
}

std::vector<HierContext> flatten_contexts(
    const std::vector<std::vector<TokenizedSequence>>& buckets) {
  std::vector<HierContext> out;
  for (const auto& b : buckets) {
    auto contexts = build_contexts(b);
    out.insert(out.end(), std::make_move_iterator(contexts.begin()),
               std::make_move_iterator(contexts.end()));
  }
  return out;
}

namespace {

constexpr uint64_t kTrainSeedSalt = 0x9e3779b97f4a7c15ull;

std::vector<int> label_ids_of(const std::vector<TokenizedSequence>& seqs) {
  std::vector<int> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(s.label_id);
  return out;
}

std::vector<int> label_ids_of(const std::vector<HierContext>& ctxs) {
  std::vector<int> out;
  out.reserve(ctxs.size());
  for (const auto& c : ctxs) out.push_back(c.target_label_id);
  return out;
}

}  // namespace

namespace {

bool is_hier(Variant v) {
  return v == Variant::GptHar || v == Variant::GptHarNote;
}

ContextMode context_mode_of(Variant v) {
  switch (v) {
    case Variant::GptArExtended: return ContextMode::Extended;
    case Variant::GptArExtendedSep: return ContextMode::ExtendedSep;
    default: return ContextMode::Single;
  }
}

std::vector<TokenizedSequence> classifier_samples(
    const std::vector<std::vector<TokenizedSequence>>& buckets, ContextMode mode,
    const Vocabulary& vocab) {
  return mode == ContextMode::Single
             ? flatten_single(buckets)
             : flatten_extended(buckets, mode == ContextMode::ExtendedSep, vocab);
}

}  // namespace

VariantModel train_variant(const PreparedDataset& ds,
                           const GptModel<float>* frozen_gpt, Variant variant,
                           uint64_t seed, const RunConfig& cfg) {
  Rng init_rng(seed);
  const uint64_t train_seed = seed ^ kTrainSeedSalt;
  VariantModel out;
  out.variant = variant;

  if (is_hier(variant)) {
    if (frozen_gpt == nullptr)
      throw DataError("the " + variant_name(variant) +
                      " variant requires a pretrained GPT bundle");
    FrozenEmbedder embedder(frozen_gpt);
    HierConfig hcfg = cfg.hier;
    hcfg.n_classes = ds.labels.size();
    hcfg.time.enabled = variant == Variant::GptHar;
    HierModel model(hcfg, frozen_gpt->config().d_model, ds.labels, init_rng);
    out.fit = train_hier(model, flatten_contexts(ds.train_buckets),
                         flatten_contexts(ds.val_buckets), embedder, cfg.train,
                         train_seed);
    out.hier = std::move(model);
    return out;
  }

  ClassifierConfig ccfg = cfg.classifier;
  ccfg.n_classes = ds.labels.size();
  ccfg.variant = variant == Variant::BaselineBiLstm
                     ? ClassifierVariant::BaselineBiLstm
                     : ClassifierVariant::GptAr;
  ccfg.context_mode = context_mode_of(variant);
  const bool needs_gpt = ccfg.variant == ClassifierVariant::GptAr;
  if (needs_gpt && frozen_gpt == nullptr)
    throw DataError("the " + variant_name(variant) +
                    " variant requires a pretrained GPT bundle");
  FrozenEmbedder embedder(frozen_gpt);
  const FrozenEmbedder* emb = needs_gpt ? &embedder : nullptr;
  const int input_dim = needs_gpt ? frozen_gpt->config().d_model
                                  : ds.vocab.total_indices();
  ClassifierModel model(ccfg, input_dim, ds.labels, init_rng);
  out.fit = train_classifier(model,
                             classifier_samples(ds.train_buckets,
                                                ccfg.context_mode, ds.vocab),
                             classifier_samples(ds.val_buckets, ccfg.context_mode,
                                                ds.vocab),
                             emb, cfg.train, train_seed);
  out.classifier = std::move(model);
  return out;
}

EvalReport evaluate_on_test(const PreparedDataset& ds,
                            const GptModel<float>* frozen_gpt,
                            const VariantModel& model, const RunConfig& cfg) {
  std::vector<int> true_ids, pred_ids;
  if (model.hier) {
    if (frozen_gpt == nullptr)
      throw DataError("evaluating a hierarchical model requires its GPT bundle");
    if (model.hier->labels().names() != ds.labels.names())
      throw DataError("model label registry does not match the dataset");
    FrozenEmbedder embedder(frozen_gpt);
    auto test = flatten_contexts(ds.test_buckets);
    pred_ids = predict_all(*model.hier, test, embedder);
    true_ids = label_ids_of(test);
  } else if (model.classifier) {
    const auto& ccfg = model.classifier->config();
    if (model.classifier->labels().names() != ds.labels.names())
      throw DataError("model label registry does not match the dataset");
    const bool needs_gpt = ccfg.variant == ClassifierVariant::GptAr;
    if (needs_gpt && frozen_gpt == nullptr)
      throw DataError("evaluating a GPTAR model requires its GPT bundle");
    FrozenEmbedder embedder(frozen_gpt);
    const FrozenEmbedder* emb = needs_gpt ? &embedder : nullptr;
    auto test = classifier_samples(ds.test_buckets, ccfg.context_mode, ds.vocab);
    pred_ids = predict_all(*model.classifier, test, emb);
    true_ids = label_ids_of(test);
  } else {
    throw UsageError("evaluate_on_test: model holds no trained variant");
  }

  EvalReport report = metrics(true_ids, pred_ids, ds.labels.names());
  report.run_meta.config_hash = config_hash(cfg);
  report.run_meta.split_id = ds.split_id;
  return report;
}

void save_variant_bundle(const std::string& dir, const VariantModel& model,
                         int sensor_input_dim) {
  if (model.hier)
    save_hier_bundle(dir, *model.hier, sensor_input_dim);
  else if (model.classifier)
    save_classifier_bundle(dir, *model.classifier, sensor_input_dim);
  else
    throw UsageError("save_variant_bundle: model holds no trained variant");
}

VariantModel load_variant_bundle(const std::string& dir) {
  VariantModel out;
  const std::string type = load_bundle(dir).model_type;
  if (type == "hier") {
    out.hier = hier_from_bundle(dir);
    out.variant = out.hier->config().time.enabled ? Variant::GptHar
                                                  : Variant::GptHarNote;
  } else if (type == "classifier") {
    out.classifier = classifier_from_bundle(dir);
    const auto& ccfg = out.classifier->config();
    out.variant = ccfg.variant == ClassifierVariant::BaselineBiLstm
                      ? Variant::BaselineBiLstm
                  : ccfg.context_mode == ContextMode::Extended
                      ? Variant::GptArExtended
                  : ccfg.context_mode == ContextMode::ExtendedSep
                      ? Variant::GptArExtendedSep
                      : Variant::GptAr;
  } else {
    throw DataError("bundle in " + dir + " is not a trained classifier (type '" +
                    type + "')");
  }
  return out;
}

EvalReport run_cell(const PreparedDataset& ds, const GptModel<float>& frozen_gpt,
                    Variant variant, uint64_t seed, const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  VariantModel model = train_variant(ds, &frozen_gpt, variant, seed, cfg);
  EvalReport report = evaluate_on_test(ds, &frozen_gpt, model, cfg);
  report.run_meta.seed = seed;
  report.run_meta.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void ExperimentPlan::validate() const {
  if (variants.empty()) throw UsageError("experiment plan: no variants");
  if (dataset_paths.empty()) throw UsageError("experiment plan: no datasets");
  if (config.seeds.empty()) throw UsageError("experiment plan: no seeds");
  std::set<uint64_t> distinct(config.seeds.begin(), config.seeds.end());
  if (distinct.size() != config.seeds.size())
    throw UsageError("experiment plan: seeds must be distinct");
  if (jobs < 1) throw UsageError("experiment plan: jobs must be >= 1");
}

namespace {

GptConfig resolve_gpt_config(const RunConfig& cfg, const Vocabulary& vocab) {
  GptConfig g = cfg.gpt;
  if (g.vocab_size == 0) {
    g.vocab_size = vocab.total_indices();
  } else if (g.vocab_size != vocab.total_indices()) {
    throw DataError("gpt config vocab_size " + std::to_string(g.vocab_size) +
                    " does not match the dataset vocabulary (" +
                    std::to_string(vocab.total_indices()) + " indices)");
  }
  return g;
}

void check_vocab_match(const Vocabulary& a, const Vocabulary& b,
                       const std::string& where) {
  if (a.ranked_tokens() != b.ranked_tokens())
    throw DataError("vocabulary mismatch: " + where +
                    " was built for a different training split");
}

std::string dataset_stem(const std::string& path, size_t index) {
  std::string stem = fs::path(path).stem().string();
  if (stem.empty()) stem = "dataset" + std::to_string(index);
  return stem;
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentPlan& plan,
                                       const std::string& out_dir) {
  plan.validate();
  fs::create_directories(out_dir);

  struct DatasetState {
    PreparedDataset prepared;
    GptModel<float> gpt;
    std::string stem;
  };
  std::vector<DatasetState> datasets;
  datasets.reserve(plan.dataset_paths.size());

  for (size_t di = 0; di < plan.dataset_paths.size(); ++di) {
    const std::string& path = plan.dataset_paths[di];
    DatasetState state;
    state.stem = dataset_stem(path, di);
    state.prepared = prepare_dataset(load_segmented(path), plan.config.split,
                                     plan.config.train.val_week_fraction, path);
    if (!plan.gpt_bundle_dir.empty()) {
      auto [model, vocab] = load_gpt_bundle(plan.gpt_bundle_dir);
      check_vocab_match(vocab, state.prepared.vocab,
                        "bundle " + plan.gpt_bundle_dir);
      state.gpt = std::move(model);
    } else if (plan.allow_pretrain) {
      GptConfig gcfg = resolve_gpt_config(plan.config, state.prepared.vocab);
      auto [model, log] =
          pretrain(state.prepared.pretrain_stream, gcfg, plan.config.pretrain);
      state.gpt = std::move(model);
      save_gpt_bundle((fs::path(out_dir) / ("gpt-" + state.stem)).string(),
                      state.gpt, state.prepared.vocab);
    } else {
      throw DataError(
          "no GPT bundle supplied and pretraining is disabled; run the "
          "`pretrain` subcommand first");
    }
    datasets.push_back(std::move(state));
  }

  struct Cell {
    size_t dataset_index;
    Variant variant;
    uint64_t seed;
  };
  std::vector<Cell> cells;
  for (size_t di = 0; di < datasets.size(); ++di)
    for (Variant v : plan.variants)
      for (uint64_t seed : plan.config.seeds) cells.push_back({di, v, seed});

  std::vector<CellResult> results(cells.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      const DatasetState& state = datasets[cell.dataset_index];
      CellResult res;
      res.variant = cell.variant;
      res.dataset = state.stem;
      res.seed = cell.seed;
      res.report = run_cell(state.prepared, state.gpt, cell.variant, cell.seed,
                            plan.config);
      const std::string base = state.stem + "_" + variant_name(cell.variant) +
                               "_seed" + std::to_string(cell.seed);
      res.report_path = (fs::path(out_dir) / (base + ".json")).string();
      write_report_json(res.report_path, res.report, variant_name(cell.variant),
                        state.stem);
      write_confusion_csv(
          (fs::path(out_dir) / (base + "_confusion.csv")).string(), res.report);
      results[i] = std::move(res);
    }
  };

  const int n_threads = std::min<int>(plan.jobs, static_cast<int>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  write_summary_csv((fs::path(out_dir) / "summary.csv").string(),
                    summarize(results));
  return results;
}

namespace {

std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<CellResult>& cells) {
  // Group by (variant, dataset) preserving first-appearance order.
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& c : cells) {
    std::pair<std::string, std::string> key{variant_name(c.variant), c.dataset};
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      keys.push_back(key);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [variant, dataset] : keys) {
    std::vector<double> f1s, bals, accs, wf1s;
    for (const auto& c : cells) {
      if (variant_name(c.variant) != variant || c.dataset != dataset) continue;
      f1s.push_back(c.report.macro_f1);
      bals.push_back(c.report.balanced_accuracy);
      accs.push_back(c.report.accuracy);
      wf1s.push_back(c.report.weighted_f1);
    }
    SummaryRow row;
    row.variant = variant;
    row.dataset = dataset;
    row.n_seeds = static_cast<int>(f1s.size());
    std::tie(row.mean_f1, row.std_f1) = mean_and_sample_std(f1s);
    std::tie(row.mean_balanced_accuracy, row.std_balanced_accuracy) =
        mean_and_sample_std(bals);
    row.mean_accuracy = mean_and_sample_std(accs).first;
    row.mean_weighted_f1 = mean_and_sample_std(wf1s).first;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write summary csv: " + path);
  out << "variant,dataset,n_seeds,mean_f1,std_f1,mean_balanced_acc,"
         "std_balanced_acc,mean_accuracy,mean_weighted_f1\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.dataset << ',' << r.n_seeds << ','
        << fmt6(r.mean_f1) << ',' << fmt6(r.std_f1) << ','
        << fmt6(r.mean_balanced_accuracy) << ',' << fmt6(r.std_balanced_accuracy)
        << ',' << fmt6(r.mean_accuracy) << ',' << fmt6(r.mean_weighted_f1) << '\n';
}

void write_report_json(const std::string& path, const EvalReport& report,
                       const std::string& variant, const std::string& dataset) {
  json doc;
  doc["format"] = "adlr-report";
  doc["version"] = 1;
  doc["variant"] = variant;
  doc["dataset"] = dataset;
  doc["labels"] = report.labels;
  json per_class = json::object();
  for (size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    per_class[report.labels[c]] = {{"precision", m.precision},
                                   {"recall", m.recall},
                                   {"f1", m.f1},
                                   {"support", m.support}};
  }
  doc["per_class"] = std::move(per_class);
  doc["macro_f1"] = report.macro_f1;
  doc["macro_precision"] = report.macro_precision;
  doc["macro_recall"] = report.macro_recall;
  doc["balanced_accuracy"] = report.balanced_accuracy;
  doc["accuracy"] = report.accuracy;
  doc["weighted_precision"] = report.weighted_precision;
  doc["weighted_recall"] = report.weighted_recall;
  doc["weighted_f1"] = report.weighted_f1;
  doc["confusion"] = report.confusion;
  doc["run_meta"] = {{"seed", report.run_meta.seed},
                     {"config_hash", report.run_meta.config_hash},
                     {"split_id", report.run_meta.split_id},
                     {"wall_time_sec", report.run_meta.wall_time_sec}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path);
  out << doc.dump(2) << '\n';
}

void write_confusion_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write confusion csv: " + path);
  out << "labels";
  for (const auto& l : report.labels) out << ',' << l;
  out << '\n';
  for (size_t r = 0; r < report.confusion.size(); ++r) {
    out << report.labels[r];
    for (int64_t v : report.confusion[r]) out << ',' << v;
    out << '\n';
  }
}

// ---------------------------------------------------- hyperparameter search

SearchResult hyperparam_search(const std::vector<GridPoint>& grid,
                               const ExperimentPlan& plan, int k,
                               const std::string& out_dir) {
  if (grid.empty()) throw UsageError("hyperparam_search: empty grid");
  fs::create_directories(out_dir);

  struct FoldData {
    Vocabulary vocab;
    LabelRegistry labels;
    std::vector<int> stream;
    std::vector<std::vector<TokenizedSequence>> train, val, test;
  };

  // Fold materialization is grid-independent; build it once per dataset.
  std::vector<std::vector<FoldData>> dataset_folds;
  std::vector<std::string> stems;
  for (size_t di = 0; di < plan.dataset_paths.size(); ++di) {
    const auto sequences = load_segmented(plan.dataset_paths[di]);
    stems.push_back(dataset_stem(plan.dataset_paths[di], di));
    DatasetSplit split = split_weeks(sequences, plan.config.split.train_ratio,
                                     plan.config.split.seed);
    auto rotations = kfold(split.train_weeks, k, plan.config.split.seed);
    LabelRegistry labels = LabelRegistry::from_sequences(sequences);
    std::vector<FoldData> folds;
    for (const auto& rot : rotations) {
      FoldData fd;
      fd.labels = labels;
      std::vector<WeekBucket> training_subset = rot.train;
      training_subset.insert(training_subset.end(), rot.validation.begin(),
                             rot.validation.end());
      auto chrono = sequences_chronological(training_subset);
      fd.vocab = build_vocab(chrono);
      fd.stream = corpus_stream(chrono, fd.vocab);
      fd.train = encode_buckets(rot.train, fd.vocab, labels);
      fd.val = encode_buckets(rot.validation, fd.vocab, labels);
      fd.test = encode_buckets(rot.test, fd.vocab, labels);
      folds.push_back(std::move(fd));
    }
    dataset_folds.push_back(std::move(folds));
  }

  SearchResult result;
  std::vector<double> point_scores;
  for (const GridPoint& point : grid) {
    double across_datasets = 0.0;
    for (size_t di = 0; di < dataset_folds.size(); ++di) {
      std::vector<double> fold_scores;
      for (const FoldData& fd : dataset_folds[di]) {
        GptConfig gcfg = plan.config.gpt;
        gcfg.n_heads = point.n_heads;
        gcfg.n_layers = point.n_layers;
        gcfg.vocab_size = fd.vocab.total_indices();
        auto [gpt, log] = pretrain(fd.stream, gcfg, plan.config.pretrain);

        FrozenEmbedder embedder(&gpt);
        ClassifierConfig ccfg = plan.config.classifier;
        ccfg.variant = ClassifierVariant::GptAr;
        ccfg.context_mode = ContextMode::Single;
        ccfg.n_classes = fd.labels.size();
        Rng rng(plan.config.seeds.front());
        ClassifierModel model(ccfg, gcfg.d_model, fd.labels, rng);
        auto train = flatten_single(fd.train);
        auto val = flatten_single(fd.val);
        auto test = flatten_single(fd.test);
        train_classifier(model, train, val, &embedder, plan.config.train,
                         plan.config.seeds.front() ^ kTrainSeedSalt);
        auto preds = predict_all(model, test, &embedder);
        fold_scores.push_back(
            macro_f1_of(label_ids_of(test), preds, fd.labels.size()));
      }
      auto [mean, stddev] = mean_and_sample_std(fold_scores);
      result.table.push_back({point, stems[di], mean, stddev});
      across_datasets += mean;
    }
    point_scores.push_back(across_datasets /
                           static_cast<double>(dataset_folds.size()));
  }

  size_t best = 0;
  for (size_t i = 1; i < grid.size(); ++i) {
    GptConfig a = plan.config.gpt, b = plan.config.gpt;
    a.n_heads = grid[best].n_heads;
    a.n_layers = grid[best].n_layers;
    a.vocab_size = std::max(a.vocab_size, 2);
    b.n_heads = grid[i].n_heads;
    b.n_layers = grid[i].n_layers;
    b.vocab_size = a.vocab_size;
    if (point_scores[i] > point_scores[best] ||
        (point_scores[i] == point_scores[best] &&
         b.param_count() < a.param_count()))
      best = i;
  }
  result.best = grid[best];

  {
    std::ofstream out(fs::path(out_dir) / "search.csv");
    if (!out) throw DataError("cannot write search.csv in " + out_dir);
    out << "n_heads,n_layers,dataset,mean_f1,std_f1\n";
    for (const auto& row : result.table)
      out << row.point.n_heads << ',' << row.point.n_layers << ',' << row.dataset
          << ',' << fmt6(row.mean_f1) << ',' << fmt6(row.std_f1) << '\n';
  }
  {
    json doc = {{"n_heads", result.best.n_heads},
                {"n_layers", result.best.n_layers}};
    std::ofstream out(fs::path(out_dir) / "best.json");
    out << doc.dump(2) << '\n';
  }
  return result;
}

}  // namespace adlr

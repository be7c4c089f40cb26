// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// adlr — activity-of-daily-living recognition pipeline over ambient-sensor
// event logs. Subcommands compose through files on disk:
//
//   synth      generate a CASAS-format log from a named synthetic scenario
//   ingest     parse + segment a log into a segmented dataset file
//   pretrain   train the GPT sensor embedding on the training split
//   train      train one classifier variant against a frozen GPT bundle
//   eval       evaluate a trained model on the held-out test weeks
//   ablate     run the (variant x dataset x seed) study with reports
//   search     3-fold cross-validated GPT hyperparameter grid search
//   attn       export attention maps for one activity sequence
//   embed-viz  per-sequence activity embeddings projected to 2-D (PCA)
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training
// divergence, 4 verification failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <adlr/config.hpp>
#include <adlr/experiment.hpp>
#include <adlr/pca.hpp>
#include <adlr/synth.hpp>
#include <adlr/verify.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ------------------------------------------------------------- utilities

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> seeds;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string item = text.substr(
        pos, comma == std::string::npos ? text.size() - pos : comma - pos);
    if (!item.empty()) {
      size_t range = item.find("..");
      try {
        if (range == std::string::npos) {
          seeds.push_back(std::stoull(item));
        } else {
          uint64_t lo = std::stoull(item.substr(0, range));
          uint64_t hi = std::stoull(item.substr(range + 2));
          if (hi < lo) throw adlr::UsageError("bad seed range '" + item + "'");
          for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        }
      } catch (const std::invalid_argument&) {
        throw adlr::UsageError("bad seed '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) throw adlr::UsageError("empty seed list");
  return seeds;
}

std::vector<adlr::GridPoint> parse_grid(const std::string& text) {
  std::vector<adlr::GridPoint> grid;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string item = text.substr(
        pos, comma == std::string::npos ? text.size() - pos : comma - pos);
    if (!item.empty()) {
      size_t x = item.find('x');
      if (x == std::string::npos)
        throw adlr::UsageError("grid points look like HEADSxLAYERS, got '" +
                               item + "'");
      try {
        grid.push_back({std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1))});
      } catch (const std::invalid_argument&) {
        throw adlr::UsageError("bad grid point '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (grid.empty()) throw adlr::UsageError("empty grid");
  return grid;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw adlr::DataError("cannot write " + path.string());
  out << text;
  if (!out) throw adlr::DataError("I/O failure writing " + path.string());
}

void write_effective_config(const fs::path& dir, const adlr::RunConfig& cfg) {
  write_text_file(dir / "effective_config.json", adlr::run_config_json(cfg, 2) + "\n");
}

adlr::GptConfig resolved_gpt_config(const adlr::RunConfig& cfg,
                                    const adlr::Vocabulary& vocab) {
  adlr::GptConfig g = cfg.gpt;
  if (g.vocab_size == 0)
    g.vocab_size = vocab.total_indices();
  else if (g.vocab_size != vocab.total_indices())
    throw adlr::DataError("config vocab_size " + std::to_string(g.vocab_size) +
                          " does not match the dataset vocabulary (" +
                          std::to_string(vocab.total_indices()) + ")");
  return g;
}

void run_gradient_verification_or_throw() {
  auto entries = adlr::verify_gradients();
  bool ok = true;
  for (const auto& e : entries) {
    std::cout << (e.pass ? "[ok]   " : "[FAIL] ") << e.name
              << "  max_rel_err=" << e.max_rel_err << "  tol=" << e.tolerance
              << '\n';
    ok = ok && e.pass;
  }
  if (!ok) throw adlr::VerificationError("gradient verification failed");
  std::cout << "gradient verification passed (" << entries.size() << " checks)\n";
}

json fit_log_json(const adlr::FitResult& fit) {
  json epochs = json::array();
  for (const auto& e : fit.log)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_metric", e.val_metric},
                      {"is_best", e.is_best}});
  return {{"epochs", std::move(epochs)},
          {"best_epoch", fit.best_epoch},
          {"best_val_metric", fit.best_val_metric},
          {"warnings", fit.warnings}};
}

// Flag-overridable run configuration shared by the training subcommands.
struct ConfigFlags {
  std::string config_path;
  std::optional<int> d_model, heads, layers, context, lstm_hidden;
  std::optional<double> dropout, lr, train_ratio;
  std::optional<int> epochs, patience, batch;
  std::optional<uint64_t> split_seed;

  void attach(CLI::App* cmd, bool model_flags, bool train_flags) {
    cmd->add_option("--config", config_path,
                    "Run-config JSON file (flags override its values)");
    cmd->add_option("--split-seed", split_seed, "Weekly split shuffle seed");
    cmd->add_option("--train-ratio", train_ratio, "Train fraction of weeks");
    if (model_flags) {
      cmd->add_option("--d-model", d_model, "Embedding width");
      cmd->add_option("--heads", heads, "Attention heads");
      cmd->add_option("--layers", layers, "Decoder layers");
      cmd->add_option("--context", context, "Context length in tokens");
      cmd->add_option("--dropout", dropout, "Dropout probability");
    }
    if (train_flags) {
      cmd->add_option("--lstm-hidden", lstm_hidden, "bi-LSTM hidden width");
      cmd->add_option("--lr", lr, "Learning rate");
      cmd->add_option("--epochs", epochs, "Maximum epochs");
      cmd->add_option("--patience", patience, "Early-stopping patience");
      cmd->add_option("--batch", batch, "Batch size");
    }
  }

  adlr::RunConfig materialize(bool pretrain_knobs) const {
    adlr::RunConfig cfg;
    if (!config_path.empty()) cfg = adlr::load_run_config(config_path);
    if (split_seed) cfg.split.seed = *split_seed;
    if (train_ratio) cfg.split.train_ratio = *train_ratio;
    if (d_model) cfg.gpt.d_model = *d_model;
    if (heads) cfg.gpt.n_heads = *heads;
    if (layers) cfg.gpt.n_layers = *layers;
    if (context) cfg.gpt.context_len = *context;
    if (dropout) cfg.gpt.dropout_p = *dropout;
    if (lstm_hidden) {
      cfg.classifier.lstm_hidden = *lstm_hidden;
      cfg.hier.lstm_hidden = *lstm_hidden;
    }
    if (pretrain_knobs) {
      if (lr) cfg.pretrain.lr = *lr;
      if (epochs) cfg.pretrain.max_epochs = *epochs;
      if (patience) cfg.pretrain.patience = *patience;
      if (batch) cfg.pretrain.batch_chunks = *batch;
    } else {
      if (lr) cfg.train.lr = *lr;
      if (epochs) cfg.train.max_epochs = *epochs;
      if (patience) cfg.train.patience = *patience;
      if (batch) cfg.train.batch_size = *batch;
    }
    return cfg;
  }
};

// ------------------------------------------------------------ subcommands

void cmd_synth(const std::string& scenario, uint64_t seed,
               std::optional<int> days, const std::string& out_dir) {
  auto scenarios = adlr::canned_scenarios();
  auto it = scenarios.find(scenario);
  if (it == scenarios.end()) {
    std::string known;
    for (const auto& [name, _] : scenarios) known += name + " ";
    throw adlr::UsageError("unknown scenario '" + scenario + "' (known: " +
                           known + ")");
  }
  adlr::SynthSpec spec = it->second;
  spec.seed = seed;
  if (days) spec.n_days = *days;
  fs::create_directories(out_dir);
  const fs::path log_path = fs::path(out_dir) / "log.txt";
  write_text_file(log_path, adlr::generate(spec));
  std::cout << "wrote " << log_path.string() << '\n';
}

void cmd_ingest(const std::string& log_path, std::string out_path) {
  auto parsed = adlr::parse_log_file(log_path);
  for (const auto& w : parsed.warnings)
    std::cerr << "warning: " << log_path << ":" << w.line_no << ": " << w.message
              << '\n';
  auto segmented = adlr::segment_activities(parsed.events);
  for (const auto& w : segmented.warnings)
    std::cerr << "warning: segmentation: " << w.message << '\n';
  if (out_path.empty())
    out_path = (fs::path(log_path).parent_path() /
                (fs::path(log_path).stem().string() + ".segmented.jsonl"))
                   .string();
  adlr::save_segmented(out_path, segmented.sequences);
  std::cout << "parsed " << parsed.events.size() << " events ("
            << parsed.warnings.size() << " parse warnings), wrote "
            << segmented.sequences.size() << " sequences to " << out_path << '\n';
}

void cmd_pretrain(const std::string& data_path, const std::string& out_dir,
                  const ConfigFlags& flags, std::optional<uint64_t> seed,
                  bool verify) {
  if (verify) run_gradient_verification_or_throw();
  adlr::RunConfig cfg = flags.materialize(/*pretrain_knobs=*/true);
  if (seed) cfg.pretrain.seed = *seed;

  auto ds = adlr::prepare_dataset(adlr::load_segmented(data_path), cfg.split,
                                  cfg.train.val_week_fraction, data_path);
  adlr::GptConfig gcfg = resolved_gpt_config(cfg, ds.vocab);
  auto [model, log] = adlr::pretrain(ds.pretrain_stream, gcfg, cfg.pretrain);

  fs::create_directories(out_dir);
  adlr::save_gpt_bundle(out_dir, model, ds.vocab);
  json log_doc = json::array();
  for (const auto& e : log.log)
    log_doc.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_perplexity", e.val_perplexity},
                       {"is_best", e.is_best}});
  write_text_file(fs::path(out_dir) / "pretrain_log.json",
                  json{{"epochs", std::move(log_doc)},
                       {"best_epoch", log.best_epoch},
                       {"best_val_perplexity", log.best_val_perplexity}}
                          .dump(2) +
                      "\n");
  write_effective_config(out_dir, cfg);
  std::cout << "pretrained " << gcfg.n_layers << "-layer decoder (vocab "
            << gcfg.vocab_size << "); best validation perplexity "
            << log.best_val_perplexity << " at epoch " << log.best_epoch
            << "; bundle in " << out_dir << '\n';
}

void cmd_train(const std::string& data_path, const std::string& gpt_dir,
               const std::string& variant_name_arg, const std::string& out_dir,
               const ConfigFlags& flags, uint64_t seed, bool verify) {
  if (verify) run_gradient_verification_or_throw();
  auto variant = adlr::parse_variant(variant_name_arg);
  if (!variant)
    throw adlr::UsageError("unknown variant '" + variant_name_arg + "'");
  adlr::RunConfig cfg = flags.materialize(/*pretrain_knobs=*/false);

  auto ds = adlr::prepare_dataset(adlr::load_segmented(data_path), cfg.split,
                                  cfg.train.val_week_fraction, data_path);

  std::optional<adlr::GptModel<float>> gpt;
  if (!gpt_dir.empty()) {
    auto [model, vocab] = adlr::load_gpt_bundle(gpt_dir);
    if (vocab.ranked_tokens() != ds.vocab.ranked_tokens())
      throw adlr::DataError(
          "vocabulary in " + gpt_dir +
          " does not match this dataset/split; re-run the pretrain subcommand");
    gpt = std::move(model);
  } else if (*variant != adlr::Variant::BaselineBiLstm) {
    throw adlr::DataError("variant '" + variant_name_arg +
                          "' needs --gpt; run the pretrain subcommand first");
  }

  auto trained = adlr::train_variant(ds, gpt ? &*gpt : nullptr, *variant, seed, cfg);
  const int input_dim = gpt ? gpt->config().d_model : ds.vocab.total_indices();
  fs::create_directories(out_dir);
  adlr::save_variant_bundle(out_dir, trained, input_dim);
  write_text_file(fs::path(out_dir) / "fit_log.json",
                  fit_log_json(trained.fit).dump(2) + "\n");
  write_effective_config(out_dir, cfg);
  for (const auto& w : trained.fit.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "trained " << adlr::variant_name(*variant)
            << "; best validation metric " << trained.fit.best_val_metric
            << " at epoch " << trained.fit.best_epoch << "; bundle in " << out_dir
            << '\n';
}

void cmd_eval(const std::string& data_path, const std::string& model_dir,
              const std::string& gpt_dir, std::string out_path,
              const ConfigFlags& flags) {
  adlr::RunConfig cfg = flags.materialize(false);
  auto ds = adlr::prepare_dataset(adlr::load_segmented(data_path), cfg.split,
                                  cfg.train.val_week_fraction, data_path);
  auto model = adlr::load_variant_bundle(model_dir);

  std::optional<adlr::GptModel<float>> gpt;
  if (!gpt_dir.empty()) gpt = adlr::load_gpt_bundle(gpt_dir).first;

  const auto t0 = std::chrono::steady_clock::now();
  auto report = adlr::evaluate_on_test(ds, gpt ? &*gpt : nullptr, model, cfg);
  report.run_meta.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (out_path.empty()) out_path = (fs::path(model_dir) / "report.json").string();
  adlr::write_report_json(out_path, report, adlr::variant_name(model.variant),
                          fs::path(data_path).stem().string());
  std::cout << adlr::variant_name(model.variant) << " test macro-F1 "
            << report.macro_f1 << " (balanced accuracy "
            << report.balanced_accuracy << "); report in " << out_path << '\n';
}

void cmd_ablate(const std::vector<std::string>& data_paths,
                const std::string& gpt_dir, const std::string& variants_csv,
                const std::string& seeds_text, const std::string& out_dir,
                const ConfigFlags& flags, int jobs, bool no_pretrain) {
  adlr::ExperimentPlan plan;
  plan.config = flags.materialize(false);
  plan.variants = adlr::parse_variant_list(variants_csv);
  plan.dataset_paths = data_paths;
  if (!seeds_text.empty()) plan.config.seeds = parse_seed_list(seeds_text);
  plan.gpt_bundle_dir = gpt_dir;
  plan.allow_pretrain = !no_pretrain;
  plan.jobs = jobs;

  auto cells = adlr::run_experiment(plan, out_dir);
  write_effective_config(out_dir, plan.config);

  auto rows = adlr::summarize(cells);
  for (const auto& r : rows)
    std::cout << r.variant << " on " << r.dataset << ": mean macro-F1 "
              << r.mean_f1 << " (std " << r.std_f1 << ", " << r.n_seeds
              << " seeds)\n";
  std::cout << cells.size() << " reports in " << out_dir << '\n';
}

void cmd_search(const std::vector<std::string>& data_paths,
                const std::string& grid_text, int folds,
                const std::string& out_dir, const ConfigFlags& flags) {
  adlr::ExperimentPlan plan;
  plan.config = flags.materialize(true);
  plan.variants = {adlr::Variant::GptAr};
  plan.dataset_paths = data_paths;

  auto result = adlr::hyperparam_search(parse_grid(grid_text), plan, folds, out_dir);
  write_effective_config(out_dir, plan.config);
  for (const auto& row : result.table)
    std::cout << row.point.n_heads << " heads, " << row.point.n_layers
              << " layers on " << row.dataset << ": mean macro-F1 " << row.mean_f1
              << " (std " << row.std_f1 << ")\n";
  std::cout << "best: " << result.best.n_heads << " heads, "
            << result.best.n_layers << " layers; table in " << out_dir << '\n';
}

void cmd_attn(const std::string& gpt_dir, const std::string& data_path,
              size_t index, std::optional<int> target, const std::string& out_path) {
  auto [model, vocab] = adlr::load_gpt_bundle(gpt_dir);
  auto sequences = adlr::load_segmented(data_path);
  if (index >= sequences.size())
    throw adlr::UsageError("sequence index " + std::to_string(index) +
                           " out of range (" + std::to_string(sequences.size()) +
                           " sequences)");
  auto labels = adlr::LabelRegistry::from_sequences(sequences);
  auto encoded = adlr::encode(sequences[index], vocab, labels);
  auto record = adlr::attention_export(
      model, encoded.token_ids, vocab,
      target ? std::optional<int>(*target) : std::nullopt);
  adlr::save_attention(out_path, record);
  std::cout << "exported attention for sequence " << index << " ("
            << sequences[index].label << ", " << encoded.token_ids.size()
            << " tokens) to " << out_path << '\n';
}

void cmd_embed_viz(const std::string& gpt_dir, const std::string& data_path,
                   const std::string& subset, const std::string& out_path,
                   const ConfigFlags& flags) {
  adlr::RunConfig cfg = flags.materialize(false);
  auto [model, vocab] = adlr::load_gpt_bundle(gpt_dir);
  auto sequences = adlr::load_segmented(data_path);
  auto labels = adlr::LabelRegistry::from_sequences(sequences);

  std::vector<adlr::ActivitySequence> chosen;
  if (subset == "all") {
    chosen = sequences;
  } else {
    auto split = adlr::split_weeks(sequences, cfg.split.train_ratio, cfg.split.seed);
    chosen = adlr::sequences_chronological(subset == "train" ? split.train_weeks
                                                             : split.test_weeks);
  }
  std::vector<adlr::TokenizedSequence> encoded;
  encoded.reserve(chosen.size());
  for (const auto& s : chosen) encoded.push_back(adlr::encode(s, vocab, labels));

  auto embeddings = adlr::embed_activities(model, encoded);
  std::vector<std::vector<double>> vectors;
  vectors.reserve(embeddings.size());
  for (const auto& e : embeddings) vectors.push_back(e.mean_vector);
  auto projection = adlr::project_2d(vectors);
  adlr::save_projection_csv(out_path, embeddings, projection);
  std::cout << "projected " << embeddings.size() << " sequences ("
            << "component variances " << projection.component_variance[0] << ", "
            << projection.component_variance[1] << ") to " << out_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adlr — daily-living activity recognition from ambient sensor logs"};
  app.require_subcommand(1);

  // synth
  std::string synth_scenario, synth_out;
  uint64_t synth_seed = 0;
  std::optional<int> synth_days;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic CASAS log");
  synth->add_option("--scenario", synth_scenario,
                    "separable | order-dependent | clock-dependent | cycle")
      ->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--days", synth_days, "Override the scenario's day count");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->callback([&] { cmd_synth(synth_scenario, synth_seed, synth_days, synth_out); });

  // ingest
  std::string ingest_log, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Parse and segment a CASAS log");
  ingest->add_option("log", ingest_log, "CASAS-format log file")->required();
  ingest->add_option("--out", ingest_out,
                     "Segmented dataset path (default: <log>.segmented.jsonl)");
  ingest->callback([&] { cmd_ingest(ingest_log, ingest_out); });

  // pretrain
  std::string pre_data, pre_out;
  std::optional<uint64_t> pre_seed;
  bool pre_verify = false;
  ConfigFlags pre_flags;
  auto* pre = app.add_subcommand("pretrain", "Pretrain the GPT sensor embedding");
  pre->add_option("--data", pre_data, "Segmented dataset file")->required();
  pre->add_option("--out", pre_out, "Bundle output directory")->required();
  pre->add_option("--seed", pre_seed, "Pretraining seed");
  pre->add_flag("--verify-gradients", pre_verify,
                "Run the 64-bit finite-difference suite first");
  pre_flags.attach(pre, /*model_flags=*/true, /*train_flags=*/true);
  pre->callback([&] { cmd_pretrain(pre_data, pre_out, pre_flags, pre_seed, pre_verify); });

  // train
  std::string train_data, train_gpt, train_variant_name, train_out;
  uint64_t train_seed = 0;
  bool train_verify = false;
  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one classifier variant");
  train->add_option("--data", train_data, "Segmented dataset file")->required();
  train->add_option("--gpt", train_gpt, "Pretrained GPT bundle directory");
  train->add_option("--variant", train_variant_name,
                    "gptar | baseline-bilstm | gptar-extended | "
                    "gptar-extended-sep | gpthar-note | gpthar")
      ->required();
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", train_out, "Model bundle output directory")->required();
  train->add_flag("--verify-gradients", train_verify,
                  "Run the 64-bit finite-difference suite first");
  train_flags.attach(train, true, true);
  train->callback([&] {
    cmd_train(train_data, train_gpt, train_variant_name, train_out, train_flags,
              train_seed, train_verify);
  });

  // eval
  std::string eval_data, eval_model, eval_gpt, eval_out;
  ConfigFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model on test weeks");
  eval->add_option("--data", eval_data, "Segmented dataset file")->required();
  eval->add_option("--model", eval_model, "Trained model bundle directory")->required();
  eval->add_option("--gpt", eval_gpt, "GPT bundle (required for GPT variants)");
  eval->add_option("--out", eval_out, "Report path (default: <model>/report.json)");
  eval_flags.attach(eval, false, false);
  eval->callback([&] { cmd_eval(eval_data, eval_model, eval_gpt, eval_out, eval_flags); });

  // ablate
  std::vector<std::string> ablate_data;
  std::string ablate_gpt, ablate_out, ablate_seeds;
  std::string ablate_variants =
      "gptar,baseline-bilstm,gptar-extended,gptar-extended-sep,gpthar-note,gpthar";
  int ablate_jobs = 1;
  bool ablate_no_pretrain = false;
  ConfigFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "Run the ablation study matrix");
  ablate->add_option("--data", ablate_data, "Segmented dataset file(s)")->required();
  ablate->add_option("--gpt", ablate_gpt, "Reuse this GPT bundle instead of pretraining");
  ablate->add_option("--variants", ablate_variants, "Comma-separated variant list");
  ablate->add_option("--seeds", ablate_seeds, "Seed list, e.g. 0..9 or 0,3,7");
  ablate->add_option("--out", ablate_out, "Report output directory")->required();
  ablate->add_option("--jobs", ablate_jobs, "Parallel cells");
  ablate->add_flag("--no-pretrain", ablate_no_pretrain,
                   "Fail instead of pretraining when no bundle is given");
  ablate_flags.attach(ablate, true, true);
  ablate->callback([&] {
    cmd_ablate(ablate_data, ablate_gpt, ablate_variants, ablate_seeds, ablate_out,
               ablate_flags, ablate_jobs, ablate_no_pretrain);
  });

  // search
  std::vector<std::string> search_data;
  std::string search_grid = "8x3,8x4,12x6", search_out;
  int search_folds = 3;
  ConfigFlags search_flags;
  auto* search = app.add_subcommand("search", "GPT hyperparameter grid search");
  search->add_option("--data", search_data, "Segmented dataset file(s)")->required();
  search->add_option("--grid", search_grid, "Grid as HEADSxLAYERS, comma-separated");
  search->add_option("--folds", search_folds, "Cross-validation folds");
  search->add_option("--out", search_out, "Output directory")->required();
  search_flags.attach(search, true, true);
  search->callback([&] {
    cmd_search(search_data, search_grid, search_folds, search_out, search_flags);
  });

  // attn
  std::string attn_gpt, attn_data, attn_out;
  size_t attn_index = 0;
  std::optional<int> attn_target;
  auto* attn = app.add_subcommand("attn", "Export attention maps for a sequence");
  attn->add_option("--gpt", attn_gpt, "GPT bundle directory")->required();
  attn->add_option("--data", attn_data, "Segmented dataset file")->required();
  attn->add_option("--index", attn_index, "Sequence index (chronological)");
  attn->add_option("--target", attn_target,
                   "Filter to heads leading to this token position");
  attn->add_option("--out", attn_out, "Output JSON path")->required();
  attn->callback([&] { cmd_attn(attn_gpt, attn_data, attn_index, attn_target, attn_out); });

  // embed-viz
  std::string viz_gpt, viz_data, viz_out, viz_subset = "test";
  ConfigFlags viz_flags;
  auto* viz = app.add_subcommand("embed-viz",
                                 "Project per-sequence activity embeddings to 2-D");
  viz->add_option("--gpt", viz_gpt, "GPT bundle directory")->required();
  viz->add_option("--data", viz_data, "Segmented dataset file")->required();
  viz->add_option("--subset", viz_subset, "test | train | all");
  viz->add_option("--out", viz_out, "Output CSV path")->required();
  viz_flags.attach(viz, false, false);
  viz->callback([&] { cmd_embed_viz(viz_gpt, viz_data, viz_subset, viz_out, viz_flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "adlr: error: usage: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::usage);
  } catch (const adlr::UsageError& e) {
    std::cerr << "adlr: error: usage: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::usage);
  } catch (const adlr::VerificationError& e) {
    std::cerr << "adlr: error: verification: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::verification);
  } catch (const adlr::DivergenceError& e) {
    std::cerr << "adlr: error: divergence: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::divergence);
  } catch (const adlr::DataError& e) {
    std::cerr << "adlr: error: data: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::data);
  } catch (const std::exception& e) {
    std::cerr << "adlr: error: internal: " << e.what() << '\n';
    return static_cast<int>(adlr::ExitCode::usage);
  }
  return static_cast<int>(adlr::ExitCode::ok);
}

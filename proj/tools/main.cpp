// Command line front end: dataset synthesis and ingestion, training,
// ranking evaluation, single-cell prediction, and attention provenance.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "rowless/checkpoint.hpp"
#include "rowless/data.hpp"
#include "rowless/evaluation.hpp"
#include "rowless/training.hpp"

namespace fs = std::filesystem;
using namespace rowless;

namespace {

struct Options {
  // data / filters
  std::string data;
  std::size_t max_pattern_len = 35;
  std::size_t min_row_degree = 5;

  // split
  double train_ratio = 0.6;
  double valid_ratio = 0.2;
  double test_ratio = 0.2;
  double unseen_rows = 0.0;  // count, or fraction when < 1
  bool kb_only_split = false;
  std::int64_t split_seed = -1;  // -1: use --seed

  // model / training
  std::string run_dir;
  std::string init_from;
  std::string aggregator = "attention";
  std::string encoder = "lookup";
  std::string objective = "nll";
  std::string precision = "f32";
  bool untied_attention = false;
  std::size_t dim = 25;
  std::size_t token_dim = 100;
  std::size_t lstm_hidden = 0;
  std::size_t batch_size = 1024;
  std::size_t negatives = 200;
  std::size_t pattern_dropout = 10;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double learning_rate = 0.01;
  double epsilon = 1e-8;
  double l2 = 0.0;
  double clip_norm = 10.0;
  std::uint64_t seed = 42;
  bool eval_test = true;

  // evaluation
  std::string checkpoint;
  std::string split_path;
  std::string extra_positives;
  std::string out_prefix;
  std::string which = "test";
  std::string protocol = "relation_rank";
  std::string neg_strategy = "default";
  std::string negative_columns = "kb";
  std::size_t eval_negatives = 0;
  std::size_t hits_k = 10;
  bool filter_text_rows = true;
  bool restrict_unseen_rows = false;
  std::int64_t eval_seed = -1;
  std::size_t threads = 1;

  // predict / explain
  std::string row;
  std::string column;

  // synth
  std::size_t synth_rows = 50;
  std::size_t synth_cols = 20;
  std::size_t synth_blocks = 2;
  double synth_noise = 0.05;
  std::string out;

  // summary (hypothetical mode)
  std::size_t num_rows = 0;
  std::size_t num_columns = 0;
  std::size_t num_tokens = 0;
};

FilterConfig filter_config(const Options& o) {
  return FilterConfig{o.max_pattern_len, o.min_row_degree};
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.model.dim = o.dim;
  cfg.model.aggregator = aggregator_from_name(o.aggregator);
  cfg.model.encoder = encoder_from_name(o.encoder);
  cfg.model.objective = objective_from_name(o.objective);
  cfg.model.untied_attention = o.untied_attention;
  cfg.model.token_dim = o.token_dim;
  cfg.model.lstm_hidden = o.lstm_hidden;
  cfg.model.seed = o.seed;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.epsilon = o.epsilon;
  cfg.l2 = o.l2;
  cfg.negatives = o.negatives;
  cfg.pattern_dropout = o.pattern_dropout;
  cfg.max_epochs = o.max_epochs;
  cfg.patience = o.patience;
  cfg.clip_norm = o.clip_norm;
  cfg.seed = o.seed;
  return cfg;
}

EvalProtocol eval_protocol(const Options& o) {
  EvalProtocol p;
  p.mode = eval_mode_from_name(o.protocol);
  p.negatives_per_positive = o.eval_negatives;
  p.hits_k = o.hits_k;
  p.filter_text_rows = o.filter_text_rows;
  if (o.neg_strategy == "default") {
    p.strategy = NegStrategy::kModeDefault;
  } else if (o.neg_strategy == "random_pairs") {
    p.strategy = NegStrategy::kRandomPairs;
  } else if (o.neg_strategy == "row_corruption") {
    p.strategy = NegStrategy::kRowCorruption;
  } else {
    throw config_error("unknown neg-strategy '" + o.neg_strategy + "'");
  }
  if (o.negative_columns == "kb") {
    p.negative_columns = ColumnUniverse::kKb;
  } else if (o.negative_columns == "text") {
    p.negative_columns = ColumnUniverse::kText;
  } else if (o.negative_columns == "all") {
    p.negative_columns = ColumnUniverse::kAll;
  } else {
    throw config_error("unknown negative-columns '" + o.negative_columns + "'");
  }
  p.restrict_rows_to_unseen = o.restrict_unseen_rows;
  p.seed = o.eval_seed >= 0 ? static_cast<std::uint64_t>(o.eval_seed) : o.seed + 1;
  return p;
}

DatasetSplit build_split(const Options& o, const Dataset& data) {
  const SplitRatios ratios{o.train_ratio, o.valid_ratio, o.test_ratio};
  const std::uint64_t seed =
      o.split_seed >= 0 ? static_cast<std::uint64_t>(o.split_seed) : o.seed;
  if (o.unseen_rows > 0) {
    return make_unseen_row_split(data.triples, data.vocab, ratios, o.unseen_rows,
                                 seed, o.kb_only_split);
  }
  return split_dataset(data.triples, data.vocab, ratios, seed, o.kb_only_split);
}

void print_report(const RankingReport& r) {
  std::cout << "map " << r.map << '\n'
            << "mrr_x100 " << r.mrr_x100 << '\n'
            << "hits@" << "k" << ' ' << r.hits_at_k << '\n'
            << "queries " << r.records.size() << '\n';
  if (r.cold_start_rows > 0) {
    std::cout << "warning: " << r.cold_start_rows
              << " cold-start rows scored without a trained embedding\n";
  }
  if (r.negative_shortfall > 0) {
    std::cout << "warning: negative generation fell short by "
              << r.negative_shortfall << " candidates\n";
  }
}

void write_report(const Options& o, const RankingReport& report,
                  const Vocabulary& vocab, const std::string& prefix) {
  save_ranking_report(report, vocab, prefix + "_summary.tsv", prefix + "_queries.tsv");
  (void)o;
}

template <typename T>
void save_model_summary(const Model<T>& model, const TrainReport& report,
                        const std::string& path, double total_seconds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << "best_epoch\t" << report.best_epoch << '\n';
  out << "best_val_metric\t" << report.best_metric << '\n';
  out << "epochs_run\t" << report.epochs.size() << '\n';
  out << "wall_clock_seconds\t" << total_seconds << '\n';
  const ModelSummary s = model_summary(model);
  for (const auto& t : s.tables) {
    out << "table\t" << t.name << '\t' << t.rows << '\t' << t.cols << '\t'
        << t.parameters() << '\n';
  }
  out << "total_parameters\t" << s.total << '\n';
  out << "row_parameters\t" << s.row_parameters << '\n';
}

template <typename T>
int run_train(const Options& o, const std::string& resolved_config) {
  const TrainConfig cfg = train_config(o);
  cfg.validate();
  const EvalProtocol protocol = eval_protocol(o);
  if (o.run_dir.empty()) throw config_error("train requires --run-dir");
  if (o.data.empty()) throw config_error("train requires --data");
  if (!o.init_from.empty() && !fs::exists(o.init_from + "/model.json")) {
    throw config_error("warm-start checkpoint not found: " + o.init_from);
  }

  const Dataset data = ingest_triples(o.data, filter_config(o));
  const DatasetSplit split = build_split(o, data);

  auto model = init_model<T>(cfg.model, data.vocab);
  if (!o.init_from.empty()) warm_start_columns(model, o.init_from);

  PairSet extra;
  const PairSet* extra_ptr = nullptr;
  if (!o.extra_positives.empty()) {
    extra = load_pair_file(o.extra_positives, data.vocab);
    extra_ptr = &extra;
  }

  fs::create_directories(o.run_dir);
  {
    std::ofstream out(o.run_dir + "/config.resolved.ini", std::ios::binary);
    out << resolved_config;
  }
  save_split(split, data.vocab, o.run_dir + "/split.tsv");

  const auto t0 = std::chrono::steady_clock::now();
  auto outcome = train(std::move(model), split, cfg, protocol, extra_ptr, o.threads);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const EpochStats& e : outcome.report.epochs) {
    std::cout << "epoch " << e.epoch << " loss " << e.mean_loss << " val "
              << e.val_metric << '\n';
  }
  std::cout << "best epoch " << outcome.report.best_epoch << " val "
            << outcome.report.best_metric << '\n';

  save_checkpoint(outcome.model, o.run_dir + "/checkpoint");
  save_train_log(outcome.report, o.run_dir + "/train_log.tsv");
  save_model_summary(outcome.model, outcome.report, o.run_dir + "/summary.tsv", seconds);

  if (o.eval_test && !split.test.empty()) {
    const RankingReport report = evaluate(outcome.model, split, split.test,
                                          protocol, extra_ptr, o.threads);
    write_report(o, report, outcome.model.vocab, o.run_dir + "/eval_test");
    print_report(report);
  }
  return 0;
}

struct LoadedRun {
  DatasetSplit split;
  std::string checkpoint_dir;
};

LoadedRun locate_run(const Options& o, const Vocabulary& vocab) {
  LoadedRun run;
  const std::string split_path =
      !o.split_path.empty() ? o.split_path : o.run_dir + "/split.tsv";
  run.split = load_split(split_path, vocab);
  return run;
}

std::string checkpoint_dir(const Options& o) {
  if (!o.checkpoint.empty()) return o.checkpoint;
  if (!o.run_dir.empty()) return o.run_dir + "/checkpoint";
  throw config_error("expected --checkpoint or --run-dir");
}

template <typename T>
int run_eval(const Options& o) {
  const std::string ckpt = checkpoint_dir(o);
  const EvalProtocol protocol = eval_protocol(o);
  const Model<T> model = load_checkpoint<T>(ckpt);
  const LoadedRun run = locate_run(o, model.vocab);
  const std::vector<Triple>& positives =
      o.which == "valid" ? run.split.valid : run.split.test;
  if (o.which != "valid" && o.which != "test") {
    throw config_error("--which must be valid|test");
  }
  PairSet extra;
  const PairSet* extra_ptr = nullptr;
  if (!o.extra_positives.empty()) {
    extra = load_pair_file(o.extra_positives, model.vocab);
    extra_ptr = &extra;
  }
  const RankingReport report =
      evaluate(model, run.split, positives, protocol, extra_ptr, o.threads);
  const std::string prefix = !o.out_prefix.empty()
                                 ? o.out_prefix
                                 : (o.run_dir.empty() ? std::string("eval_") + o.which
                                                      : o.run_dir + "/eval_" + o.which);
  write_report(o, report, model.vocab, prefix);
  print_report(report);
  return 0;
}

template <typename T>
int run_predict(const Options& o) {
  const Model<T> model = load_checkpoint<T>(checkpoint_dir(o));
  const LoadedRun run = locate_run(o, model.vocab);
  const auto row = model.vocab.find_row(o.row);
  const auto col = model.vocab.find_column(o.column);
  if (!row) throw std::runtime_error("unknown row '" + o.row + "'");
  if (!col) throw std::runtime_error("unknown column '" + o.column + "'");
  const T score = score_pair(model, run.split, *row, *col);
  std::cout << o.row << '\t' << o.column << '\t' << sigmoid(score) << '\n';
  return 0;
}

template <typename T>
int run_explain(const Options& o) {
  const Model<T> model = load_checkpoint<T>(checkpoint_dir(o));
  const AggregatorKind kind = model.config.aggregator;
  if (kind != AggregatorKind::kAttention && kind != AggregatorKind::kMaxRelation) {
    throw explain_error(std::string("aggregator '") + aggregator_name(kind) +
                        "' has no evidence weighting to explain");
  }
  const LoadedRun run = locate_run(o, model.vocab);
  const auto row = model.vocab.find_row(o.row);
  const auto col = model.vocab.find_column(o.column);
  if (!row) throw std::runtime_error("unknown row '" + o.row + "'");
  if (!col) throw std::runtime_error("unknown column '" + o.column + "'");

  Rng rng(0);
  const ObservedSet obs =
      build_observed_set(run.split, *row, *col, /*train_mode=*/false, 0, rng);
  if (obs.empty()) throw std::runtime_error("row '" + o.row + "' has no evidence");
  const Encoded<T> query = model.encode(*col, Role::kKey);
  const auto keys = model.encode_batch(std::span<const ColId>(obs.columns), Role::kKey);
  std::vector<Encoded<T>> outs_storage;
  const std::vector<Encoded<T>>* outs = &keys;
  if (!model.tied()) {
    outs_storage = model.encode_batch(std::span<const ColId>(obs.columns), Role::kOutput);
    outs = &outs_storage;
  }
  const RowRep<T> rep = row_vector(model, *row, run.split.row_in_train[*row] != 0,
                                   keys, *outs, std::span<const T>(query.vec));
  std::cout << "score\t"
            << sigmoid(dot(std::span<const T>(rep.vec), std::span<const T>(query.vec)))
            << '\n';
  std::vector<std::pair<T, ColId>> weighted;
  for (std::size_t j = 0; j < obs.columns.size(); ++j) {
    if (rep.trace.weights[j] > T(0)) {
      weighted.push_back({rep.trace.weights[j], obs.columns[j]});
    }
  }
  std::stable_sort(weighted.begin(), weighted.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [w, c] : weighted) {
    std::cout << model.vocab.column_name(c) << '\t' << w << '\n';
  }
  return 0;
}

int run_summary(const Options& o) {
  ModelSummary s;
  if (!o.checkpoint.empty() || !o.run_dir.empty()) {
    const Model<float> model = load_checkpoint<float>(checkpoint_dir(o));
    s = model_summary(model);
  } else {
    if (o.num_columns == 0) {
      throw config_error("summary needs --checkpoint/--run-dir or --num-columns");
    }
    ModelConfig cfg;
    cfg.dim = o.dim;
    cfg.aggregator = aggregator_from_name(o.aggregator);
    cfg.encoder = encoder_from_name(o.encoder);
    cfg.objective = objective_from_name(o.objective);
    cfg.untied_attention = o.untied_attention;
    cfg.token_dim = o.token_dim;
    cfg.lstm_hidden = o.lstm_hidden;
    s = summarize_config(cfg, o.num_rows, o.num_columns, o.num_tokens);
  }
  for (const auto& t : s.tables) {
    std::cout << t.name << '\t' << t.rows << " x " << t.cols << '\t'
              << t.parameters() << '\n';
  }
  std::cout << "total\t" << s.total << '\n';
  std::cout << "row_parameters\t" << s.row_parameters << '\n';
  return 0;
}

int run_synth(const Options& o) {
  if (o.out.empty()) throw config_error("synth requires --out");
  SynthSpec spec{o.synth_rows, o.synth_cols, o.synth_blocks, o.synth_noise, o.seed};
  const SynthData data = generate_synthetic(spec);
  const fs::path prefix(o.out);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  write_triples_tsv(data.vocab, data.triples, o.out + ".triples.tsv");
  write_synth_blocks(data, o.out + ".blocks.tsv");
  write_synth_truth(data, o.out + ".truth.tsv");
  std::cout << "rows " << spec.n_rows << " cols " << spec.n_cols << " triples "
            << data.triples.size() << '\n';
  return 0;
}

int run_ingest(const Options& o) {
  if (o.data.empty()) throw config_error("ingest requires --data");
  if (o.out.empty()) throw config_error("ingest requires --out");
  const Dataset data = ingest_triples(o.data, filter_config(o));
  data.vocab.save(o.out);
  std::cout << "rows " << data.vocab.num_rows() << '\n'
            << "columns " << data.vocab.num_columns() << " (kb "
            << data.vocab.num_kb_columns() << ", text "
            << data.vocab.num_text_columns() << ")\n"
            << "tokens " << data.vocab.num_tokens() << '\n'
            << "triples " << data.triples.size() << '\n'
            << "duplicates_dropped " << data.stats.duplicates << '\n'
            << "long_patterns_dropped " << data.stats.dropped_long_patterns << '\n'
            << "low_degree_rows_dropped " << data.stats.dropped_low_degree_rows << '\n';
  return 0;
}

void add_filter_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--max-pattern-len", o.max_pattern_len,
                  "Drop TEXT columns with more tokens than this (0 disables)");
  cmd->add_option("--min-row-degree", o.min_row_degree,
                  "Drop rows with fewer KB facts than this (0 disables)");
}

void add_split_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--train-ratio", o.train_ratio, "Train share of the triple split");
  cmd->add_option("--valid-ratio", o.valid_ratio, "Validation share");
  cmd->add_option("--test-ratio", o.test_ratio, "Test share");
  cmd->add_option("--unseen-rows", o.unseen_rows,
                  "Hold out this many rows (fraction when < 1) as cold-start test rows");
  cmd->add_flag("--kb-only-split", o.kb_only_split,
                "Partition only KB triples; TEXT stays in train");
  cmd->add_option("--split-seed", o.split_seed, "Split seed (-1: use --seed)");
}

void add_eval_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--protocol", o.protocol, "type_map|relation_rank");
  cmd->add_option("--eval-negatives", o.eval_negatives,
                  "Negatives per positive (0: protocol default)");
  cmd->add_option("--hits-k", o.hits_k, "Cutoff for hits@k");
  cmd->add_option("--filter-text-rows", o.filter_text_rows,
                  "Corrupted rows must have textual mentions (relation_rank)");
  cmd->add_option("--neg-strategy", o.neg_strategy, "default|random_pairs|row_corruption");
  cmd->add_option("--negative-columns", o.negative_columns,
                  "Column universe for random pairs: kb|text|all");
  cmd->add_option("--extra-positives", o.extra_positives,
                  "TSV of row<TAB>column pairs treated as known-true when filtering");
  cmd->add_flag("--restrict-unseen-rows", o.restrict_unseen_rows,
                "Draw negative rows from the held-out rows only");
  cmd->add_option("--eval-seed", o.eval_seed, "Negative sampling seed (-1: seed+1)");
  cmd->add_option("--threads", o.threads, "Evaluation threads");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Row-less universal schema models for knowledge-base completion"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML key-value file");
  app.fallthrough();

  CLI::App* synth = app.add_subcommand("synth", "Generate a planted block dataset");
  synth->add_option("--rows", o.synth_rows, "Row count");
  synth->add_option("--cols", o.synth_cols, "Column count");
  synth->add_option("--blocks", o.synth_blocks, "Planted block count");
  synth->add_option("--noise", o.synth_noise, "Observation flip probability");
  synth->add_option("--seed", o.seed, "Generator seed");
  synth->add_option("--out", o.out, "Output prefix")->required();

  CLI::App* ingest = app.add_subcommand("ingest", "Parse, filter and index a triple file");
  ingest->add_option("--data", o.data, "Triple TSV")->required();
  ingest->add_option("--out", o.out, "Vocabulary output directory")->required();
  add_filter_options(ingest, o);

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", o.data, "Triple TSV")->required();
  train_cmd->add_option("--run-dir", o.run_dir, "Run directory")->required();
  add_filter_options(train_cmd, o);
  add_split_options(train_cmd, o);
  train_cmd->add_option("--aggregator", o.aggregator,
                        "explicit|mean_pool|max_pool|max_relation|attention");
  train_cmd->add_option("--encoder", o.encoder, "lookup|lstm");
  train_cmd->add_option("--objective", o.objective, "nll|bpr");
  train_cmd->add_flag("--untied-attention", o.untied_attention,
                      "Separate key and output column tables (attention only)");
  train_cmd->add_option("--dim", o.dim, "Embedding dimension");
  train_cmd->add_option("--token-dim", o.token_dim, "Token embedding dimension (lstm)");
  train_cmd->add_option("--lstm-hidden", o.lstm_hidden,
                        "LSTM hidden size (0: equal to --dim)");
  train_cmd->add_option("--batch-size", o.batch_size, "Examples per optimizer step");
  train_cmd->add_option("--negatives", o.negatives, "Sampled negatives per example");
  train_cmd->add_option("--pattern-dropout", o.pattern_dropout,
                        "Evidence cap m during training (0 disables)");
  train_cmd->add_option("--max-epochs", o.max_epochs, "Epoch limit");
  train_cmd->add_option("--patience", o.patience,
                        "Epochs without validation improvement before stopping");
  train_cmd->add_option("--lr", o.learning_rate, "Adam learning rate");
  train_cmd->add_option("--epsilon", o.epsilon, "Adam epsilon");
  train_cmd->add_option("--l2", o.l2, "Weight decay on touched rows");
  train_cmd->add_option("--clip-norm", o.clip_norm,
                        "Global gradient norm cap (lstm encoder only)");
  train_cmd->add_option("--seed", o.seed, "Master seed");
  train_cmd->add_option("--init-from", o.init_from,
                        "Warm-start column vectors from a donor checkpoint");
  train_cmd->add_option("--precision", o.precision, "f32|f64");
  train_cmd->add_option("--eval-test", o.eval_test,
                        "Evaluate the test split after training");
  add_eval_options(train_cmd, o);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--run-dir", o.run_dir, "Run directory (checkpoint + split)");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  eval_cmd->add_option("--split", o.split_path, "Split TSV (default: run-dir/split.tsv)");
  eval_cmd->add_option("--which", o.which, "valid|test");
  eval_cmd->add_option("--out-prefix", o.out_prefix, "Report file prefix");
  eval_cmd->add_option("--precision", o.precision, "f32|f64");
  add_eval_options(eval_cmd, o);

  CLI::App* predict = app.add_subcommand("predict", "Score one (row, column) cell");
  predict->add_option("--run-dir", o.run_dir, "Run directory");
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  predict->add_option("--split", o.split_path, "Split TSV");
  predict->add_option("--row", o.row, "Row name")->required();
  predict->add_option("--column", o.column, "Column name")->required();
  predict->add_option("--precision", o.precision, "f32|f64");

  CLI::App* explain = app.add_subcommand(
      "explain", "Show the evidence weighting behind one prediction");
  explain->add_option("--run-dir", o.run_dir, "Run directory");
  explain->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  explain->add_option("--split", o.split_path, "Split TSV");
  explain->add_option("--row", o.row, "Row name")->required();
  explain->add_option("--column", o.column, "Query column name")->required();
  explain->add_option("--precision", o.precision, "f32|f64");

  CLI::App* summary = app.add_subcommand("summary", "Report parameter counts by table");
  summary->add_option("--run-dir", o.run_dir, "Run directory");
  summary->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
  summary->add_option("--num-rows", o.num_rows, "Hypothetical row count");
  summary->add_option("--num-columns", o.num_columns, "Hypothetical column count");
  summary->add_option("--num-tokens", o.num_tokens, "Hypothetical token count");
  summary->add_option("--dim", o.dim, "Embedding dimension");
  summary->add_option("--aggregator", o.aggregator, "Aggregator kind");
  summary->add_option("--encoder", o.encoder, "lookup|lstm");
  summary->add_option("--token-dim", o.token_dim, "Token embedding dimension");
  summary->add_option("--lstm-hidden", o.lstm_hidden, "LSTM hidden size");
  summary->add_flag("--untied-attention", o.untied_attention, "Untied attention tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (o.precision != "f32" && o.precision != "f64") {
      throw config_error("--precision must be f32 or f64");
    }
    const bool f64 = o.precision == "f64";
    if (app.got_subcommand(synth)) return run_synth(o);
    if (app.got_subcommand(ingest)) return run_ingest(o);
    if (app.got_subcommand(train_cmd)) {
      const std::string resolved = train_cmd->config_to_str(true, false);
      return f64 ? run_train<double>(o, resolved) : run_train<float>(o, resolved);
    }
    if (app.got_subcommand(eval_cmd)) {
      if (o.checkpoint.empty() && o.run_dir.empty()) {
        throw config_error("eval expects --checkpoint or --run-dir");
      }
      if (!fs::exists(checkpoint_dir(o) + "/model.json")) {
        throw config_error("checkpoint not found: " + checkpoint_dir(o));
      }
      return f64 ? run_eval<double>(o) : run_eval<float>(o);
    }
    if (app.got_subcommand(predict)) {
      return f64 ? run_predict<double>(o) : run_predict<float>(o);
    }
    if (app.got_subcommand(explain)) {
      return f64 ? run_explain<double>(o) : run_explain<float>(o);
    }
    if (app.got_subcommand(summary)) return run_summary(o);
    throw config_error("no subcommand selected");
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const explain_error& e) {
    std::cerr << "explain error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

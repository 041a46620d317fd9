#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rowless/data.hpp"
#include "rowless/errors.hpp"
#include "rowless/evaluation.hpp"
#include "rowless/loss.hpp"
#include "rowless/model.hpp"

namespace rowless {

struct TrainConfig {
  ModelConfig model;
  std::size_t batch_size = 1024;
  double learning_rate = 0.01;
  double epsilon = 1e-8;
  double l2 = 0.0;
  std::size_t negatives = 200;
  std::size_t pattern_dropout = 10;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double clip_norm = 10.0;  // applied in LSTM mode only
  std::uint64_t seed = 42;

  void validate() const {
    model.validate();
    if (batch_size == 0) throw config_error("batch_size must be positive");
    if (negatives == 0) throw config_error("negatives must be positive");
    if (max_epochs == 0) throw config_error("max_epochs must be positive");
    if (learning_rate <= 0) throw config_error("learning_rate must be positive");
    if (epsilon <= 0) throw config_error("epsilon must be positive");
    if (l2 < 0) throw config_error("l2 must be non-negative");
  }
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double val_metric = 0;
  double seconds = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0;
};

struct BatchStats {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t examples = 0;
  double mean_loss = 0;
  double grad_norm = 0;       // before clipping
  double grad_norm_clipped = 0;
};

using BatchObserver = std::function<void(const BatchStats&)>;

template <typename T>
struct TrainOutcome {
  Model<T> model;  // parameters of the best validation epoch
  TrainReport report;
};

// Shuffled minibatch epochs: per example the objective samples its negatives,
// gradients accumulate into a per-batch sink (mean over examples), LSTM runs
// clip the global norm, and Adam applies the touched rows. Validation is
// scored each epoch on a candidate set generated once; training stops after
// `patience` epochs without improvement and the best epoch's parameters are
// returned.
template <typename T>
TrainOutcome<T> train(Model<T> model, const DatasetSplit& split,
                      const TrainConfig& config, const EvalProtocol& val_protocol,
                      const PairSet* extra_positives = nullptr,
                      std::size_t threads = 1, const BatchObserver& observer = {}) {
  config.validate();
  if (split.train.empty()) throw empty_dataset_error("empty train split");

  AdamOptions<T> adam;
  adam.learning_rate = static_cast<T>(config.learning_rate);
  adam.epsilon = static_cast<T>(config.epsilon);

  // The cold-start negative restriction refers to held-out test rows;
  // validation rows are seen, so it never applies here.
  EvalProtocol vp = val_protocol;
  vp.restrict_rows_to_unseen = false;
  const bool have_valid = !split.valid.empty();
  CandidateSet val_candidates;
  if (have_valid) {
    val_candidates = build_eval_candidates(split, model.vocab, split.valid, vp,
                                           extra_positives);
  }

  const std::size_t k = config.model.objective == Objective::kBpr
                            ? 1
                            : config.negatives;
  const bool clip = config.model.encoder == EncoderKind::kLstm;

  Rng rng(config.seed);
  TrainReport report;
  Model<T> best = model;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto tables = model.tables();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      GradSink<T> sink(clip ? static_cast<T>(config.clip_norm) : T(0));
      double batch_loss = 0;
      for (std::size_t i = start; i < end; ++i) {
        const Triple& t = split.train[order[i]];
        TrainingExample ex;
        ex.row = t.row;
        ex.positive = t.column;
        ex.negatives = sample_negatives(t.row, k, split, model.vocab.num_columns(), rng);
        batch_loss += static_cast<double>(
            example_loss(model, split, ex, config.pattern_dropout, rng, &sink));
      }
      const std::size_t n_batch = end - start;
      const double mean_loss = batch_loss / static_cast<double>(n_batch);
      if (!std::isfinite(mean_loss)) {
        throw divergence_error("non-finite loss in epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index));
      }
      sink.scale(T(1) / static_cast<T>(n_batch));
      const T pre_norm = sink.clip();
      if (observer) {
        observer(BatchStats{epoch, batch_index, n_batch, mean_loss,
                            static_cast<double>(pre_norm),
                            static_cast<double>(sink.global_norm())});
      }
      apply_updates(tables, sink, adam, static_cast<T>(config.l2));
      epoch_loss += batch_loss;
      ++batch_index;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = epoch_loss / static_cast<double>(order.size());
    if (have_valid) {
      const RankingReport val =
          evaluate_candidates(model, split, val_candidates, vp, threads);
      stats.val_metric = vp.mode == EvalMode::kTypeMap ? val.map
                                                       : val.mrr_x100 / 100.0;
    } else {
      stats.val_metric = -stats.mean_loss;  // fall back to loss improvement
    }
    stats.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(stats);

    if (stats.val_metric > best_metric) {
      best_metric = stats.val_metric;
      best_epoch = epoch;
      best = model;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best > config.patience) break;
    }
  }

  report.best_epoch = best_epoch;
  report.best_metric = best_metric;
  return TrainOutcome<T>{std::move(best), std::move(report)};
}

void save_train_log(const TrainReport& report, const std::string& path);

}  // namespace rowless

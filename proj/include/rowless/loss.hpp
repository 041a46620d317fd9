#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rowless/aggregation.hpp"
#include "rowless/data.hpp"
#include "rowless/errors.hpp"
#include "rowless/math.hpp"
#include "rowless/model.hpp"
#include "rowless/rng.hpp"

namespace rowless {

// One positive fact and the sampled negative columns scored against it.
struct TrainingExample {
  RowId row = 0;
  ColId positive = 0;
  std::vector<ColId> negatives;
};

// Uniform draws from the columns not observed with the row in training.
// Distinct when the unobserved pool is large enough, with replacement
// otherwise (tiny datasets can have fewer than k unobserved columns).
inline std::vector<ColId> sample_negatives(RowId row, std::size_t k,
                                           const DatasetSplit& split,
                                           std::size_t num_columns, Rng& rng) {
  const auto& observed = split.observed_columns[row];  // ascending
  std::vector<ColId> pool;
  pool.reserve(num_columns - observed.size());
  std::size_t oi = 0;
  for (ColId c = 0; c < num_columns; ++c) {
    while (oi < observed.size() && observed[oi] < c) ++oi;
    if (oi < observed.size() && observed[oi] == c) continue;
    pool.push_back(c);
  }
  if (pool.empty()) {
    throw degenerate_row_error("row observes every column; no negatives available");
  }
  std::vector<ColId> negs;
  negs.reserve(k);
  if (pool.size() >= k) {
    for (std::size_t i : rng.sample_indices(pool.size(), k)) negs.push_back(pool[i]);
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      negs.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }
  }
  return negs;
}

template <typename T>
struct LossGrads {
  T loss = 0;
  T d_pos = 0;
  std::vector<T> d_negs;
};

// Sampled negative log likelihood over raw (pre-sigmoid) scores:
// -log s(pos) - sum_j log s(-neg_j).
template <typename T>
LossGrads<T> nll_loss(T pos_score, std::span<const T> neg_scores) {
  LossGrads<T> g;
  g.loss = -log_sigmoid(pos_score);
  g.d_pos = sigmoid(pos_score) - T(1);
  g.d_negs.resize(neg_scores.size());
  for (std::size_t j = 0; j < neg_scores.size(); ++j) {
    g.loss -= log_sigmoid(-neg_scores[j]);
    g.d_negs[j] = sigmoid(neg_scores[j]);
  }
  return g;
}

// Pairwise ranking loss: -log s(pos - neg).
template <typename T>
LossGrads<T> bpr_loss(T pos_score, T neg_score) {
  LossGrads<T> g;
  const T margin = pos_score - neg_score;
  g.loss = -log_sigmoid(margin);
  g.d_pos = sigmoid(margin) - T(1);
  g.d_negs.assign(1, T(1) - sigmoid(margin));
  return g;
}

// Scores the example's positive and negative columns against aggregated row
// representations built from a fixed evidence set, applies the objective, and
// (when a sink is given) backpropagates into every touched parameter row.
// Deterministic given its inputs; evidence sampling happens in example_loss.
template <typename T>
T example_loss_fixed(const Model<T>& model, const TrainingExample& ex,
                     bool row_trained, const ObservedSet& obs,
                     GradSink<T>* sink) {
  const std::size_t dim = model.config.dim;
  const bool untied = !model.tied();

  const auto keys = model.encode_batch(std::span<const ColId>(obs.columns), Role::kKey);
  std::vector<Encoded<T>> outs_storage;
  const std::vector<Encoded<T>>* outs = &keys;
  if (untied) {
    outs_storage = model.encode_batch(std::span<const ColId>(obs.columns), Role::kOutput);
    outs = &outs_storage;
  }

  std::vector<ColId> queries;
  queries.reserve(1 + ex.negatives.size());
  queries.push_back(ex.positive);
  for (ColId c : ex.negatives) queries.push_back(c);

  std::vector<Encoded<T>> query_enc = model.encode_batch(std::span<const ColId>(queries), Role::kKey);
  std::vector<RowRep<T>> reps;
  reps.reserve(queries.size());
  std::vector<T> scores(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    reps.push_back(row_vector(model, ex.row, row_trained, keys, *outs,
                              std::span<const T>(query_enc[q].vec)));
    scores[q] = dot(std::span<const T>(reps[q].vec), std::span<const T>(query_enc[q].vec));
  }

  LossGrads<T> grads;
  if (model.config.objective == Objective::kSampledNll) {
    grads = nll_loss(scores[0], std::span<const T>(scores.data() + 1, scores.size() - 1));
  } else {
    if (ex.negatives.empty()) {
      throw config_error("bpr needs one sampled negative per example");
    }
    grads = bpr_loss(scores[0], scores[1]);
  }

  if (sink == nullptr) return grads.loss;

  std::vector<std::vector<T>> d_keys(keys.size(), std::vector<T>(dim, T(0)));
  std::vector<std::vector<T>> d_outs;
  if (untied) d_outs.assign(keys.size(), std::vector<T>(dim, T(0)));
  std::vector<std::vector<T>>& d_outs_ref = untied ? d_outs : d_keys;

  const std::size_t scored = model.config.objective == Objective::kBpr
                                 ? 2
                                 : queries.size();
  for (std::size_t q = 0; q < scored; ++q) {
    const T d_score = q == 0 ? grads.d_pos : grads.d_negs[q - 1];
    if (d_score == T(0)) continue;
    // score = rep . query: both factors get a share.
    std::vector<T> d_rep(dim), d_query(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      d_rep[i] = d_score * query_enc[q].vec[i];
      d_query[i] = d_score * reps[q].vec[i];
    }
    row_vector_backward(model, reps[q], ex.row, keys, *outs,
                        std::span<const T>(query_enc[q].vec),
                        std::span<const T>(d_rep), d_keys, d_outs_ref, d_query,
                        *sink);
    model.backprop_encoding(query_enc[q], Role::kKey, d_query, *sink);
  }

  for (std::size_t j = 0; j < keys.size(); ++j) {
    bool nonzero = false;
    for (T x : d_keys[j]) nonzero = nonzero || x != T(0);
    if (nonzero) model.backprop_encoding(keys[j], Role::kKey, d_keys[j], *sink);
    if (untied) {
      nonzero = false;
      for (T x : d_outs[j]) nonzero = nonzero || x != T(0);
      if (nonzero) model.backprop_encoding((*outs)[j], Role::kOutput, d_outs[j], *sink);
    }
  }
  return grads.loss;
}

// Spec-level entry point: builds the evidence set for the example (train
// mode, query column excluded, pattern dropout) and evaluates the objective.
template <typename T>
T example_loss(const Model<T>& model, const DatasetSplit& split,
               const TrainingExample& ex, std::size_t pattern_dropout_m,
               Rng& rng, GradSink<T>* sink) {
  const ObservedSet obs = build_observed_set(split, ex.row, ex.positive,
                                             /*train_mode=*/true,
                                             pattern_dropout_m, rng);
  return example_loss_fixed(model, ex, split.row_in_train[ex.row] != 0, obs, sink);
}

}  // namespace rowless

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "rowless/data.hpp"
#include "rowless/errors.hpp"
#include "rowless/math.hpp"
#include "rowless/model.hpp"
#include "rowless/rng.hpp"

namespace rowless {

// The evidence columns a row representation is built from: the row's observed
// training columns minus the query column, in ascending column-id order.
struct ObservedSet {
  std::vector<ColId> columns;

  bool empty() const { return columns.empty(); }
  std::size_t size() const { return columns.size(); }
};

// In train mode, sets larger than dropout_m are thinned to a uniform random
// subset of dropout_m entries (pattern dropout, resampled on every visit).
// Eval mode uses the full set. dropout_m = 0 disables thinning.
inline ObservedSet build_observed_set(const DatasetSplit& split, RowId row,
                                      ColId query, bool train_mode,
                                      std::size_t dropout_m, Rng& rng) {
  ObservedSet obs;
  const auto& cols = split.observed_columns[row];
  obs.columns.reserve(cols.size());
  for (ColId c : cols) {
    if (c != query) obs.columns.push_back(c);
  }
  if (train_mode && dropout_m > 0 && obs.columns.size() > dropout_m) {
    const auto keep = rng.sample_indices(obs.columns.size(), dropout_m);
    std::vector<ColId> kept;
    kept.reserve(dropout_m);
    for (std::size_t i : keep) kept.push_back(obs.columns[i]);
    obs.columns = std::move(kept);  // sample_indices returns ascending order
  }
  return obs;
}

template <typename T>
struct AttentionTrace {
  std::vector<T> weights;        // per observed column, sums to 1
  std::size_t chosen_index = 0;  // argmax entry (max-relation pick)
};

// Row representation plus the forward caches the backward pass needs.
template <typename T>
struct RowRep {
  AggregatorKind kind = AggregatorKind::kMeanPool;
  std::vector<T> vec;
  AttentionTrace<T> trace;              // attention / max-relation
  std::vector<std::size_t> argmax_dim;  // max-pool: winning column per dim
  bool fallback = false;                // empty evidence -> zero vector
};

template <typename T>
std::vector<T> aggregate_mean(const std::vector<Encoded<T>>& obs, std::size_t dim) {
  std::vector<T> out(dim, T(0));
  for (const Encoded<T>& e : obs) {
    for (std::size_t i = 0; i < dim; ++i) out[i] += e.vec[i];
  }
  const T inv = T(1) / static_cast<T>(obs.size());
  for (T& x : out) x *= inv;
  return out;
}

template <typename T>
std::vector<T> aggregate_max_pool(const std::vector<Encoded<T>>& obs,
                                  std::size_t dim,
                                  std::vector<std::size_t>& argmax_dim) {
  std::vector<T> out(dim);
  argmax_dim.assign(dim, 0);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = obs[0].vec[i];
    for (std::size_t j = 1; j < obs.size(); ++j) {
      if (obs[j].vec[i] > out[i]) {  // strict: ties keep the lowest column id
        out[i] = obs[j].vec[i];
        argmax_dim[i] = j;
      }
    }
  }
  return out;
}

// Picks the observed column most similar to the query; ties go to the lowest
// column id (the set is ascending by id).
template <typename T>
std::size_t max_relation_index(const std::vector<Encoded<T>>& obs,
                               std::span<const T> query) {
  std::size_t best = 0;
  T best_score = dot(std::span<const T>(obs[0].vec), query);
  for (std::size_t j = 1; j < obs.size(); ++j) {
    const T s = dot(std::span<const T>(obs[j].vec), query);
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

template <typename T>
AttentionTrace<T> attention_weights(const std::vector<Encoded<T>>& keys,
                                    std::span<const T> query) {
  AttentionTrace<T> trace;
  trace.weights.resize(keys.size());
  for (std::size_t j = 0; j < keys.size(); ++j) {
    trace.weights[j] = dot(std::span<const T>(keys[j].vec), query);
  }
  softmax_inplace(trace.weights);
  trace.chosen_index = 0;
  for (std::size_t j = 1; j < keys.size(); ++j) {
    if (trace.weights[j] > trace.weights[trace.chosen_index]) trace.chosen_index = j;
  }
  return trace;
}

// Dispatches to the configured aggregation. keys and outs describe the same
// observed columns; they are the same encodings unless attention is untied.
// ExplicitRow reads the row table and requires the row to have been seen in
// training (row_trained); everything else works from the evidence alone.
template <typename T>
RowRep<T> row_vector(const Model<T>& model, RowId row, bool row_trained,
                     const std::vector<Encoded<T>>& keys,
                     const std::vector<Encoded<T>>& outs,
                     std::span<const T> query) {
  const std::size_t dim = model.config.dim;
  RowRep<T> rep;
  rep.kind = model.config.aggregator;

  if (rep.kind == AggregatorKind::kExplicitRow) {
    if (!row_trained) {
      throw unseen_row_error("row '" + model.vocab.row_name(row) +
                             "' has no trained embedding");
    }
    const auto r = model.row_embeddings.row(row);
    rep.vec.assign(r.begin(), r.end());
    return rep;
  }

  if (keys.empty()) {
    rep.vec.assign(dim, T(0));
    rep.fallback = true;
    return rep;
  }

  switch (rep.kind) {
    case AggregatorKind::kMeanPool:
      rep.vec = aggregate_mean(outs, dim);
      break;
    case AggregatorKind::kMaxPool:
      rep.vec = aggregate_max_pool(outs, dim, rep.argmax_dim);
      break;
    case AggregatorKind::kMaxRelation: {
      rep.trace.chosen_index = max_relation_index(keys, query);
      rep.trace.weights.assign(keys.size(), T(0));
      rep.trace.weights[rep.trace.chosen_index] = T(1);
      rep.vec = outs[rep.trace.chosen_index].vec;
      break;
    }
    case AggregatorKind::kAttention: {
      rep.trace = attention_weights(keys, query);
      rep.vec.assign(dim, T(0));
      for (std::size_t j = 0; j < outs.size(); ++j) {
        axpy(rep.trace.weights[j], std::span<const T>(outs[j].vec),
             std::span<T>(rep.vec));
      }
      break;
    }
    case AggregatorKind::kExplicitRow:
      break;  // handled above
  }
  return rep;
}

// Backward through the aggregation. d_vec is the gradient at the row
// representation; contributions are accumulated into d_keys/d_outs/d_query
// (owned by the caller, one slot per observed column) and, for the explicit
// row table, straight into the sink.
template <typename T>
void row_vector_backward(const Model<T>& model, const RowRep<T>& rep, RowId row,
                         const std::vector<Encoded<T>>& keys,
                         const std::vector<Encoded<T>>& outs,
                         std::span<const T> query, std::span<const T> d_vec,
                         std::vector<std::vector<T>>& d_keys,
                         std::vector<std::vector<T>>& d_outs,
                         std::vector<T>& d_query, GradSink<T>& sink) {
  const std::size_t dim = model.config.dim;
  if (rep.kind == AggregatorKind::kExplicitRow) {
    sink.add(kTableRows, row, d_vec);
    return;
  }
  if (rep.fallback) return;

  switch (rep.kind) {
    case AggregatorKind::kMeanPool: {
      const T inv = T(1) / static_cast<T>(outs.size());
      for (std::size_t j = 0; j < outs.size(); ++j) {
        axpy(inv, d_vec, std::span<T>(d_outs[j]));
      }
      break;
    }
    case AggregatorKind::kMaxPool: {
      for (std::size_t i = 0; i < dim; ++i) {
        d_outs[rep.argmax_dim[i]][i] += d_vec[i];
      }
      break;
    }
    case AggregatorKind::kMaxRelation: {
      // Subgradient: the selection itself is not differentiated.
      axpy(T(1), d_vec, std::span<T>(d_outs[rep.trace.chosen_index]));
      break;
    }
    case AggregatorKind::kAttention: {
      const auto& p = rep.trace.weights;
      std::vector<T> d_p(outs.size());
      T expected = 0;
      for (std::size_t j = 0; j < outs.size(); ++j) {
        axpy(p[j], d_vec, std::span<T>(d_outs[j]));
        d_p[j] = dot(d_vec, std::span<const T>(outs[j].vec));
        expected += p[j] * d_p[j];
      }
      for (std::size_t j = 0; j < keys.size(); ++j) {
        const T d_score = p[j] * (d_p[j] - expected);
        axpy(d_score, query, std::span<T>(d_keys[j]));
        axpy(d_score, std::span<const T>(keys[j].vec), std::span<T>(d_query));
      }
      break;
    }
    case AggregatorKind::kExplicitRow:
      break;
  }
}

}  // namespace rowless

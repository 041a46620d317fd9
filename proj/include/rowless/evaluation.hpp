#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "rowless/aggregation.hpp"
#include "rowless/data.hpp"
#include "rowless/errors.hpp"
#include "rowless/math.hpp"
#include "rowless/model.hpp"
#include "rowless/rng.hpp"

namespace rowless {

enum class EvalMode { kTypeMap, kRelationRank };
enum class NegStrategy { kModeDefault, kRandomPairs, kRowCorruption };
enum class ColumnUniverse { kKb, kText, kAll };

const char* eval_mode_name(EvalMode m);
EvalMode eval_mode_from_name(const std::string& name);

struct EvalProtocol {
  EvalMode mode = EvalMode::kRelationRank;
  // Negatives generated per positive; 0 means the mode default (100 for
  // type ranking, every available candidate for relation ranking).
  std::size_t negatives_per_positive = 0;
  std::size_t hits_k = 10;
  // Relation ranking: corrupted rows must have textual mentions available at
  // training time.
  bool filter_text_rows = true;
  NegStrategy strategy = NegStrategy::kModeDefault;
  ColumnUniverse negative_columns = ColumnUniverse::kKb;
  // Cold-start protocol: draw negative rows from the held-out rows only.
  bool restrict_rows_to_unseen = false;
  std::uint64_t seed = 1234;

  NegStrategy resolved_strategy() const {
    if (strategy != NegStrategy::kModeDefault) return strategy;
    return mode == EvalMode::kTypeMap ? NegStrategy::kRandomPairs
                                      : NegStrategy::kRowCorruption;
  }
  std::size_t resolved_negatives() const {
    if (negatives_per_positive > 0) return negatives_per_positive;
    return mode == EvalMode::kTypeMap ? 100 : 0;  // 0 = all candidates
  }
};

inline std::uint64_t pair_key(RowId r, ColId c) {
  return (std::uint64_t(r) << 32) | std::uint64_t(c);
}

using PairSet = std::unordered_set<std::uint64_t>;

// Every positive of the dataset (train, valid, test and retained evidence):
// the filter universe for negative generation.
PairSet all_positive_pairs(const DatasetSplit& split);

// Mean over the positives of the precision at each positive's rank.
double average_precision(std::span<const std::uint8_t> ranked_labels);

struct MrrHits {
  double mrr_x100 = 0;
  double hits_at_k = 0;
};

MrrHits mrr_and_hits(std::span<const std::size_t> ranks, std::size_t k);

struct QueryRecord {
  RowId row = 0;
  ColId column = 0;
  std::size_t rank = 0;        // pessimistic rank of the positive in its list
  std::size_t candidates = 0;  // list size including the positive
};

struct RankingReport {
  double map = 0;
  double mrr_x100 = 0;
  double hits_at_k = 0;
  std::vector<QueryRecord> records;
  std::size_t cold_start_rows = 0;  // rows scored without a trained embedding
  std::size_t negative_shortfall = 0;
};

struct Candidate {
  RowId row;
  ColId column;
};

// Candidate sets are generated once (seeded) and can be re-scored many times,
// e.g. by per-epoch validation during training.
struct CandidateSet {
  EvalMode mode = EvalMode::kRelationRank;
  struct Query {
    Triple positive;
    std::vector<Candidate> negatives;
  };
  std::vector<Query> queries;  // relation ranking
  struct TypeList {
    ColId type;
    std::vector<RowId> positive_rows;
    std::vector<Candidate> negatives;
  };
  std::vector<TypeList> type_lists;  // type ranking
  std::size_t shortfall = 0;
};

CandidateSet build_eval_candidates(const DatasetSplit& split,
                                   const Vocabulary& vocab,
                                   const std::vector<Triple>& positives,
                                   const EvalProtocol& protocol,
                                   const PairSet* extra_positives = nullptr);

// Scores one (row, column) cell: the raw dot product between the aggregated
// row representation (eval mode: full evidence, query excluded) and the
// column encoding. Rows without a trained embedding under the explicit-row
// model score as zero vectors; *cold_start reports that.
template <typename T>
T score_pair(const Model<T>& model, const DatasetSplit& split, RowId row,
             ColId col, bool* cold_start = nullptr) {
  if (cold_start) *cold_start = false;
  const Encoded<T> query = model.encode(col, Role::kKey);
  if (model.config.aggregator == AggregatorKind::kExplicitRow &&
      !split.row_in_train[row]) {
    if (cold_start) *cold_start = true;
    return T(0);
  }
  Rng rng(0);  // unused: eval mode never samples
  const ObservedSet obs =
      build_observed_set(split, row, col, /*train_mode=*/false, 0, rng);
  const auto keys = model.encode_batch(std::span<const ColId>(obs.columns), Role::kKey);
  std::vector<Encoded<T>> outs_storage;
  const std::vector<Encoded<T>>* outs = &keys;
  if (!model.tied()) {
    outs_storage = model.encode_batch(std::span<const ColId>(obs.columns), Role::kOutput);
    outs = &outs_storage;
  }
  const RowRep<T> rep = row_vector(model, row, split.row_in_train[row] != 0,
                                   keys, *outs, std::span<const T>(query.vec));
  return dot(std::span<const T>(rep.vec), std::span<const T>(query.vec));
}

namespace detail {

// Parallel map over [0, n) preserving slot order.
template <typename Fn>
void for_each_indexed(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  const std::size_t used = std::min(threads, n);
  for (std::size_t w = 0; w < used; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += used) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace detail

template <typename T>
RankingReport evaluate_candidates(const Model<T>& model,
                                  const DatasetSplit& split,
                                  const CandidateSet& candidates,
                                  const EvalProtocol& protocol,
                                  std::size_t threads = 1) {
  RankingReport report;
  report.negative_shortfall = candidates.shortfall;
  std::set<RowId> cold_rows;

  if (candidates.mode == EvalMode::kRelationRank) {
    const std::size_t n = candidates.queries.size();
    report.records.resize(n);
    std::vector<std::vector<RowId>> cold_per_query(n);
    detail::for_each_indexed(n, threads, [&](std::size_t qi) {
      const auto& q = candidates.queries[qi];
      bool cold = false;
      const T pos_score =
          score_pair(model, split, q.positive.row, q.positive.column, &cold);
      if (cold) cold_per_query[qi].push_back(q.positive.row);
      std::size_t rank = 1;
      for (const Candidate& neg : q.negatives) {
        bool neg_cold = false;
        const T s = score_pair(model, split, neg.row, neg.column, &neg_cold);
        if (neg_cold) cold_per_query[qi].push_back(neg.row);
        if (s >= pos_score) ++rank;  // ties resolve against the positive
      }
      report.records[qi] = QueryRecord{q.positive.row, q.positive.column, rank,
                                       q.negatives.size() + 1};
    });
    for (const auto& v : cold_per_query) cold_rows.insert(v.begin(), v.end());
    std::vector<std::size_t> ranks(n);
    for (std::size_t i = 0; i < n; ++i) ranks[i] = report.records[i].rank;
    const MrrHits mh = mrr_and_hits(ranks, protocol.hits_k);
    report.mrr_x100 = mh.mrr_x100;
    report.hits_at_k = mh.hits_at_k;
    double ap = 0;
    for (std::size_t r : ranks) ap += 1.0 / static_cast<double>(r);
    report.map = n > 0 ? ap / static_cast<double>(n) : 0;
    report.cold_start_rows = cold_rows.size();
    return report;
  }

  // Type ranking: one pooled list per query type, pessimistic tie order
  // (negatives above positives on equal scores).
  const std::size_t n_lists = candidates.type_lists.size();
  std::vector<double> list_ap(n_lists, 0);
  std::vector<std::vector<QueryRecord>> list_records(n_lists);
  std::vector<std::vector<RowId>> cold_per_list(n_lists);
  detail::for_each_indexed(n_lists, threads, [&](std::size_t li) {
    const auto& list = candidates.type_lists[li];
    struct Scored {
      T score;
      bool positive;
      RowId row;
    };
    std::vector<Scored> scored;
    scored.reserve(list.positive_rows.size() + list.negatives.size());
    for (RowId r : list.positive_rows) {
      bool cold = false;
      scored.push_back({score_pair(model, split, r, list.type, &cold), true, r});
      if (cold) cold_per_list[li].push_back(r);
    }
    for (const Candidate& c : list.negatives) {
      bool cold = false;
      scored.push_back({score_pair(model, split, c.row, c.column, &cold), false, c.row});
      if (cold) cold_per_list[li].push_back(c.row);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.positive != b.positive) return !a.positive;  // negatives first on ties
      return a.row < b.row;
    });
    std::vector<std::uint8_t> labels(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) labels[i] = scored[i].positive;
    list_ap[li] = average_precision(labels);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (scored[i].positive) {
        list_records[li].push_back(
            QueryRecord{scored[i].row, list.type, i + 1, scored.size()});
      }
    }
  });
  for (const auto& v : cold_per_list) cold_rows.insert(v.begin(), v.end());

  double map = 0;
  std::vector<std::size_t> ranks;
  for (std::size_t li = 0; li < n_lists; ++li) {
    map += list_ap[li];
    for (const QueryRecord& r : list_records[li]) {
      report.records.push_back(r);
      ranks.push_back(r.rank);
    }
  }
  report.map = n_lists > 0 ? map / static_cast<double>(n_lists) : 0;
  const MrrHits mh = mrr_and_hits(ranks, protocol.hits_k);
  report.mrr_x100 = mh.mrr_x100;
  report.hits_at_k = mh.hits_at_k;
  report.cold_start_rows = cold_rows.size();
  return report;
}

template <typename T>
RankingReport evaluate(const Model<T>& model, const DatasetSplit& split,
                       const std::vector<Triple>& positives,
                       const EvalProtocol& protocol,
                       const PairSet* extra_positives = nullptr,
                       std::size_t threads = 1) {
  const CandidateSet candidates = build_eval_candidates(
      split, model.vocab, positives, protocol, extra_positives);
  return evaluate_candidates(model, split, candidates, protocol, threads);
}

void save_ranking_report(const RankingReport& report, const Vocabulary& vocab,
                         const std::string& summary_path,
                         const std::string& queries_path);

PairSet load_pair_file(const std::string& path, const Vocabulary& vocab);

}  // namespace rowless

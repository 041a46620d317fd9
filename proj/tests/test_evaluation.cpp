#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "rowless/evaluation.hpp"
#include "test_support.hpp"

using namespace rowless;

namespace {

// Four trained rows with hand-set explicit embeddings, one text column so
// relation ranking finds corruption candidates, and two KB query columns.
struct HandFixture {
  Vocabulary vocab;
  DatasetSplit split;
  Model<double> model;
};

HandFixture hand_fixture() {
  HandFixture fx;
  for (int r = 0; r < 4; ++r) fx.vocab.add_row("r" + std::to_string(r));
  fx.vocab.add_column("c0", Source::kKb);
  fx.vocab.add_column("c1", Source::kKb);
  fx.vocab.add_column("near the", Source::kText);

  std::vector<Triple> train;
  for (RowId r = 0; r < 4; ++r) {
    train.push_back({r, 1, Source::kKb});
    train.push_back({r, 2, Source::kText});
  }
  std::vector<Triple> test{{0, 0, Source::kKb}, {3, 0, Source::kKb}};
  fx.split = make_split_from_parts(train, {}, test, {}, fx.vocab);

  ModelConfig cfg;
  cfg.dim = 2;
  cfg.aggregator = AggregatorKind::kExplicitRow;
  fx.model = init_model<double>(cfg, fx.vocab);
  const double rows[4][2] = {{2, 0}, {1, 0}, {3, 0}, {0, 1}};
  for (RowId r = 0; r < 4; ++r) {
    fx.model.row_embeddings.row(r)[0] = rows[r][0];
    fx.model.row_embeddings.row(r)[1] = rows[r][1];
  }
  // c0 = (1, 0): scores for c0 are r0=2, r1=1, r2=3, r3=0.
  fx.model.columns.row(0)[0] = 1;
  fx.model.columns.row(0)[1] = 0;
  fx.model.columns.row(1)[0] = 0;
  fx.model.columns.row(1)[1] = 0;
  fx.model.columns.row(2)[0] = 0;
  fx.model.columns.row(2)[1] = 0;
  return fx;
}

}  // namespace

TEST_CASE("average precision oracles") {
  CHECK(average_precision(std::vector<std::uint8_t>{1, 0, 1}) ==
        doctest::Approx(0.833333333).epsilon(1e-6));
  CHECK(average_precision(std::vector<std::uint8_t>{1, 1, 0, 0}) == 1.0);
  for (std::size_t r = 1; r <= 6; ++r) {
    std::vector<std::uint8_t> labels(6, 0);
    labels[r - 1] = 1;
    CHECK(average_precision(labels) ==
          doctest::Approx(1.0 / static_cast<double>(r)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(average_precision(std::vector<std::uint8_t>{0, 0}),
                  undefined_ap_error);
}

TEST_CASE("mrr and hits oracles") {
  const std::vector<std::size_t> ranks{1, 2, 4};
  const auto m = mrr_and_hits(ranks, 10);
  CHECK(m.mrr_x100 == doctest::Approx(58.3333333).epsilon(1e-6));
  CHECK(m.hits_at_k == 1.0);

  const std::vector<std::size_t> mid{3};
  CHECK(mrr_and_hits(mid, 10).hits_at_k == 1.0);  // rank 3 of 101 candidates
  const std::vector<std::size_t> ones{1, 1, 1};
  CHECK(mrr_and_hits(ones, 10).mrr_x100 == 100.0);
  const std::vector<std::size_t> deep{11};
  CHECK(mrr_and_hits(deep, 10).hits_at_k == 0.0);
}

TEST_CASE("relation ranking on a hand fixture gives hand-computed metrics") {
  auto fx = hand_fixture();
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.seed = 77;
  const auto report = evaluate(fx.model, fx.split, fx.split.test, p);
  // Query (r0, c0): negatives r1 (1), r2 (3); pos score 2 -> rank 2.
  // Query (r3, c0): negatives r1 (1), r2 (3); pos score 0 -> rank 3.
  REQUIRE(report.records.size() == 2);
  std::map<RowId, std::size_t> ranks;
  for (const auto& r : report.records) ranks[r.row] = r.rank;
  CHECK(ranks[0] == 2);
  CHECK(ranks[3] == 3);
  CHECK(report.mrr_x100 == doctest::Approx(100.0 * (0.5 + 1.0 / 3.0) / 2).epsilon(1e-9));
  CHECK(report.hits_at_k == 1.0);
}

TEST_CASE("type ranking pools per-type lists and averages their AP") {
  auto fx = hand_fixture();
  EvalProtocol p;
  p.mode = EvalMode::kTypeMap;
  p.strategy = NegStrategy::kRowCorruption;
  p.seed = 78;
  const auto report = evaluate(fx.model, fx.split, fx.split.test, p);
  // One list for c0: scores r2=3, r0=2(+), r1=1, r3=0(+) -> AP = (1/2 + 2/4)/2.
  CHECK(report.map == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("generated negatives are never dataset positives") {
  const auto data = generate_synthetic({20, 12, 2, 0.1, 21});
  const auto split = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 21);
  const PairSet positives = all_positive_pairs(split);
  for (EvalMode mode : {EvalMode::kTypeMap, EvalMode::kRelationRank}) {
    EvalProtocol p;
    p.mode = mode;
    p.negatives_per_positive = 50;
    p.filter_text_rows = false;
    p.seed = 4;
    const auto cands = build_eval_candidates(split, data.vocab, split.test, p);
    if (mode == EvalMode::kRelationRank) {
      for (const auto& q : cands.queries) {
        for (const auto& n : q.negatives) {
          CHECK_FALSE(positives.count(pair_key(n.row, n.column)));
        }
      }
    } else {
      for (const auto& list : cands.type_lists) {
        for (const auto& n : list.negatives) {
          CHECK_FALSE(positives.count(pair_key(n.row, n.column)));
        }
      }
    }
  }
}

TEST_CASE("relation-ranking negatives come from text-mentioned rows") {
  const auto data = generate_synthetic({20, 12, 2, 0.1, 22});
  const auto split = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 22, true);
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.filter_text_rows = true;
  p.seed = 5;
  const auto cands = build_eval_candidates(split, data.vocab, split.test, p);
  for (const auto& q : cands.queries) {
    for (const auto& n : q.negatives) {
      CHECK(split.row_has_text[n.row]);
    }
  }
}

TEST_CASE("exhausted universes emit what they can and log the shortfall") {
  auto fx = hand_fixture();  // 4 rows -> at most 2 corruption candidates
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.negatives_per_positive = 100;
  p.seed = 6;
  const auto cands = build_eval_candidates(fx.split, fx.vocab, fx.split.test, p);
  for (const auto& q : cands.queries) CHECK(q.negatives.size() <= 2);
  CHECK(cands.shortfall == 2 * (100 - 2));
}

TEST_CASE("pair rows corrupt the object side only") {
  Vocabulary v;
  v.add_row("a|x");
  v.add_row("a|y");
  v.add_row("b|z");
  v.add_column("rel", Source::kKb);
  std::vector<Triple> train{{1, 0, Source::kKb}, {2, 0, Source::kKb}};
  std::vector<Triple> test{{0, 0, Source::kKb}};
  auto split = make_split_from_parts(train, {}, test, {}, v);
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.filter_text_rows = false;
  const auto cands = build_eval_candidates(split, v, split.test, p);
  REQUIRE(cands.queries.size() == 1);
  // b|z shares no subject with a|x; a|y is positive-filtered... none remain.
  CHECK(cands.queries[0].negatives.empty());
}

TEST_CASE("a constant-score model ranks positives pessimistically") {
  auto fx = hand_fixture();
  for (EmbeddingTable<double>* t : fx.model.tables()) {
    std::fill(t->weight.begin(), t->weight.end(), 0.0);
  }
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.seed = 9;
  const auto report = evaluate(fx.model, fx.split, fx.split.test, p);
  for (const auto& r : report.records) {
    CHECK(r.rank == r.candidates);  // dead last among its ties
  }
}

TEST_CASE("evaluation leaves the model untouched") {
  auto fx = hand_fixture();
  const auto before = fx.model.columns.weight;
  const auto before_rows = fx.model.row_embeddings.weight;
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  evaluate(fx.model, fx.split, fx.split.test, p);
  CHECK(fx.model.columns.weight == before);
  CHECK(fx.model.row_embeddings.weight == before_rows);
}

TEST_CASE("reported metrics are recomputable from the per-query records") {
  const auto data = generate_synthetic({16, 10, 2, 0.1, 31});
  const auto split = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 31);
  ModelConfig cfg;
  cfg.dim = 4;
  cfg.aggregator = AggregatorKind::kMeanPool;
  cfg.seed = 31;
  const auto model = init_model<double>(cfg, data.vocab);

  SUBCASE("relation ranking") {
    EvalProtocol p;
    p.mode = EvalMode::kRelationRank;
    p.filter_text_rows = false;
    p.seed = 11;
    const auto report = evaluate(model, split, split.test, p);
    double rr = 0, hits = 0;
    for (const auto& r : report.records) {
      rr += 1.0 / static_cast<double>(r.rank);
      hits += r.rank <= p.hits_k;
    }
    const double n = static_cast<double>(report.records.size());
    CHECK(report.mrr_x100 == doctest::Approx(100.0 * rr / n).epsilon(1e-12));
    CHECK(report.hits_at_k == doctest::Approx(hits / n).epsilon(1e-12));
  }
  SUBCASE("type ranking") {
    EvalProtocol p;
    p.mode = EvalMode::kTypeMap;
    p.negatives_per_positive = 30;
    p.seed = 12;
    const auto report = evaluate(model, split, split.test, p);
    std::map<ColId, std::vector<std::size_t>> by_type;
    for (const auto& r : report.records) by_type[r.column].push_back(r.rank);
    double map = 0;
    for (auto& [type, ranks] : by_type) {
      std::sort(ranks.begin(), ranks.end());
      double ap = 0;
      for (std::size_t i = 0; i < ranks.size(); ++i) {
        ap += static_cast<double>(i + 1) / static_cast<double>(ranks[i]);
      }
      map += ap / static_cast<double>(ranks.size());
    }
    map /= static_cast<double>(by_type.size());
    CHECK(report.map == doctest::Approx(map).epsilon(1e-12));
  }
}

TEST_CASE("extra positive pairs are excluded from the negatives") {
  auto fx = hand_fixture();
  PairSet extra;
  extra.insert(pair_key(2, 0));  // declare (r2, c0) true
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  const auto cands = build_eval_candidates(fx.split, fx.vocab, fx.split.test, p, &extra);
  for (const auto& q : cands.queries) {
    for (const auto& n : q.negatives) {
      CHECK(pair_key(n.row, n.column) != pair_key(2, 0));
    }
  }
}

TEST_CASE("cold-start rows are scored as zero vectors and counted") {
  auto fx = hand_fixture();
  // Rebuild the split so row 3 never appears in training.
  std::vector<Triple> train;
  for (RowId r = 0; r < 3; ++r) {
    train.push_back({r, 1, Source::kKb});
    train.push_back({r, 2, Source::kText});
  }
  std::vector<Triple> test{{3, 0, Source::kKb}};
  fx.split = make_split_from_parts(train, {}, test, {}, fx.vocab);
  EvalProtocol p;
  p.mode = EvalMode::kRelationRank;
  p.filter_text_rows = false;
  const auto report = evaluate(fx.model, fx.split, fx.split.test, p);
  CHECK(report.cold_start_rows == 1);

  bool cold = false;
  CHECK(score_pair(fx.model, fx.split, 3, 0, &cold) == 0.0);
  CHECK(cold);
}

TEST_CASE("restricting negative rows to the unseen set") {
  const auto data = generate_synthetic({20, 12, 2, 0.05, 41});
  const auto split =
      make_unseen_row_split(data.triples, data.vocab, {0.6, 0.2, 0.2}, 0.25, 41);
  EvalProtocol p;
  p.mode = EvalMode::kTypeMap;
  p.negatives_per_positive = 20;
  p.restrict_rows_to_unseen = true;
  p.seed = 2;
  const auto cands = build_eval_candidates(split, data.vocab, split.test, p);
  for (const auto& list : cands.type_lists) {
    for (const auto& n : list.negatives) {
      CHECK(split.row_unseen[n.row]);
    }
  }
}

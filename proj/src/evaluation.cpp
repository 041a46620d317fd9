#include "rowless/evaluation.hpp"

#include <fstream>
#include <map>

namespace rowless {

const char* eval_mode_name(EvalMode m) {
  return m == EvalMode::kTypeMap ? "type_map" : "relation_rank";
}

EvalMode eval_mode_from_name(const std::string& name) {
  if (name == "type_map") return EvalMode::kTypeMap;
  if (name == "relation_rank") return EvalMode::kRelationRank;
  throw config_error("unknown eval mode '" + name + "' (expected type_map|relation_rank)");
}

PairSet all_positive_pairs(const DatasetSplit& split) {
  PairSet set;
  for (const auto* part : {&split.train, &split.valid, &split.test, &split.evidence}) {
    for (const Triple& t : *part) set.insert(pair_key(t.row, t.column));
  }
  return set;
}

double average_precision(std::span<const std::uint8_t> ranked_labels) {
  std::size_t positives = 0;
  double ap = 0;
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    if (ranked_labels[i]) {
      ++positives;
      ap += static_cast<double>(positives) / static_cast<double>(i + 1);
    }
  }
  if (positives == 0) {
    throw undefined_ap_error("average precision needs at least one positive");
  }
  return ap / static_cast<double>(positives);
}

MrrHits mrr_and_hits(std::span<const std::size_t> ranks, std::size_t k) {
  MrrHits out;
  if (ranks.empty()) return out;
  double rr = 0;
  std::size_t hits = 0;
  for (std::size_t r : ranks) {
    rr += 1.0 / static_cast<double>(r);
    if (r <= k) ++hits;
  }
  out.mrr_x100 = 100.0 * rr / static_cast<double>(ranks.size());
  out.hits_at_k = static_cast<double>(hits) / static_cast<double>(ranks.size());
  return out;
}

namespace {

// The first pipe-separated component of a pair row name, or the whole name
// for single-entity rows.
std::string row_subject(const std::string& name) {
  const auto pipe = name.find('|');
  return pipe == std::string::npos ? name : name.substr(0, pipe);
}

std::vector<RowId> row_universe(const DatasetSplit& split, const Vocabulary& vocab,
                                const EvalProtocol& protocol) {
  std::vector<RowId> rows;
  const bool want_text = protocol.mode == EvalMode::kRelationRank &&
                         protocol.filter_text_rows;
  for (RowId r = 0; r < vocab.num_rows(); ++r) {
    if (want_text && !split.row_has_text[r]) continue;
    if (protocol.restrict_rows_to_unseen && !split.row_unseen[r]) continue;
    rows.push_back(r);
  }
  return rows;
}

std::vector<ColId> column_universe(const Vocabulary& vocab, ColumnUniverse which) {
  std::vector<ColId> cols;
  for (ColId c = 0; c < vocab.num_columns(); ++c) {
    const Source s = vocab.column_source(c);
    if (which == ColumnUniverse::kKb && s != Source::kKb) continue;
    if (which == ColumnUniverse::kText && s != Source::kText) continue;
    cols.push_back(c);
  }
  return cols;
}

}  // namespace

CandidateSet build_eval_candidates(const DatasetSplit& split,
                                   const Vocabulary& vocab,
                                   const std::vector<Triple>& positives,
                                   const EvalProtocol& protocol,
                                   const PairSet* extra_positives) {
  CandidateSet out;
  out.mode = protocol.mode;
  PairSet filter = all_positive_pairs(split);
  if (extra_positives) {
    filter.insert(extra_positives->begin(), extra_positives->end());
  }
  const auto rows = row_universe(split, vocab, protocol);
  const NegStrategy strategy = protocol.resolved_strategy();
  const std::size_t per_positive = protocol.resolved_negatives();
  Rng rng(protocol.seed);

  // Per-positive negative lists, then (for type ranking) pooled per type.
  std::vector<std::vector<Candidate>> negatives(positives.size());

  if (strategy == NegStrategy::kRandomPairs) {
    const auto cols = column_universe(vocab, protocol.negative_columns);
    std::vector<Candidate> pool;
    pool.reserve(rows.size() * cols.size() / 2);
    for (RowId r : rows) {
      for (ColId c : cols) {
        if (!filter.count(pair_key(r, c))) pool.push_back({r, c});
      }
    }
    const std::size_t want = per_positive == 0 ? pool.size() : per_positive;
    for (std::size_t pi = 0; pi < positives.size(); ++pi) {
      if (pool.size() <= want) {
        negatives[pi] = pool;
        out.shortfall += want - pool.size();
      } else {
        for (std::size_t idx : rng.sample_indices(pool.size(), want)) {
          negatives[pi].push_back(pool[idx]);
        }
      }
    }
  } else {
    for (std::size_t pi = 0; pi < positives.size(); ++pi) {
      const Triple& pos = positives[pi];
      const std::string subject = row_subject(vocab.row_name(pos.row));
      const bool pair_row =
          vocab.row_name(pos.row).find('|') != std::string::npos;
      std::vector<Candidate> cands;
      for (RowId r : rows) {
        if (r == pos.row) continue;
        if (pair_row && row_subject(vocab.row_name(r)) != subject) continue;
        if (filter.count(pair_key(r, pos.column))) continue;
        cands.push_back({r, pos.column});
      }
      if (per_positive == 0 || cands.size() <= per_positive) {
        if (per_positive > 0 && cands.size() < per_positive) {
          out.shortfall += per_positive - cands.size();
        }
        negatives[pi] = std::move(cands);
      } else {
        for (std::size_t idx : rng.sample_indices(cands.size(), per_positive)) {
          negatives[pi].push_back(cands[idx]);
        }
      }
    }
  }

  if (protocol.mode == EvalMode::kRelationRank) {
    out.queries.reserve(positives.size());
    for (std::size_t pi = 0; pi < positives.size(); ++pi) {
      out.queries.push_back({positives[pi], std::move(negatives[pi])});
    }
    return out;
  }

  // Pool by query type; a negative lands in the list of its own column.
  std::map<ColId, CandidateSet::TypeList> lists;
  for (const Triple& pos : positives) {
    auto& list = lists[pos.column];
    list.type = pos.column;
    list.positive_rows.push_back(pos.row);
  }
  for (const auto& negs : negatives) {
    for (const Candidate& c : negs) {
      auto it = lists.find(c.column);
      if (it != lists.end()) it->second.negatives.push_back(c);
    }
  }
  for (auto& [type, list] : lists) {
    std::sort(list.positive_rows.begin(), list.positive_rows.end());
    list.positive_rows.erase(
        std::unique(list.positive_rows.begin(), list.positive_rows.end()),
        list.positive_rows.end());
    std::sort(list.negatives.begin(), list.negatives.end(),
              [](const Candidate& a, const Candidate& b) {
                return a.row != b.row ? a.row < b.row : a.column < b.column;
              });
    list.negatives.erase(std::unique(list.negatives.begin(), list.negatives.end(),
                                     [](const Candidate& a, const Candidate& b) {
                                       return a.row == b.row && a.column == b.column;
                                     }),
                         list.negatives.end());
    out.type_lists.push_back(std::move(list));
  }
  return out;
}

void save_ranking_report(const RankingReport& report, const Vocabulary& vocab,
                         const std::string& summary_path,
                         const std::string& queries_path) {
  {
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw io_error("cannot write " + summary_path);
    out << "map\t" << report.map << '\n';
    out << "mrr_x100\t" << report.mrr_x100 << '\n';
    out << "hits_at_k\t" << report.hits_at_k << '\n';
    out << "queries\t" << report.records.size() << '\n';
    out << "cold_start_rows\t" << report.cold_start_rows << '\n';
    out << "negative_shortfall\t" << report.negative_shortfall << '\n';
  }
  std::ofstream out(queries_path, std::ios::binary);
  if (!out) throw io_error("cannot write " + queries_path);
  for (const QueryRecord& r : report.records) {
    out << vocab.column_name(r.column) << '\t' << vocab.row_name(r.row) << '\t'
        << r.rank << '\t' << r.candidates << '\n';
  }
}

PairSet load_pair_file(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read pair file " + path);
  PairSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw parse_error(path + ":" + std::to_string(line_no) + ": expected row<TAB>column");
    }
    const auto row = vocab.find_row(line.substr(0, tab));
    const auto col = vocab.find_column(line.substr(tab + 1));
    // Pairs over strings outside the vocabulary cannot collide with scored
    // candidates, so they are skipped rather than rejected.
    if (row && col) set.insert(pair_key(*row, *col));
  }
  return set;
}

}  // namespace rowless

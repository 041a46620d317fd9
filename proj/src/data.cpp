#include "rowless/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rowless/errors.hpp"
#include "rowless/rng.hpp"

namespace rowless {

namespace {

struct RawTriple {
  std::string row, column;
  Source source;
};

RawTriple parse_line(const std::string& line, const std::string& origin,
                     std::size_t line_no) {
  const auto fail = [&](const std::string& what) -> parse_error {
    return parse_error(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  const auto t1 = line.find('\t');
  if (t1 == std::string::npos) throw fail("expected row<TAB>column<TAB>source");
  const auto t2 = line.find('\t', t1 + 1);
  if (t2 == std::string::npos) throw fail("expected row<TAB>column<TAB>source");
  if (line.find('\t', t2 + 1) != std::string::npos) throw fail("too many fields");
  RawTriple t;
  t.row = line.substr(0, t1);
  t.column = line.substr(t1 + 1, t2 - t1 - 1);
  const std::string source = line.substr(t2 + 1);
  if (t.row.empty()) throw fail("empty row field");
  if (t.column.empty()) throw fail("empty column field");
  try {
    t.source = source_from_name(source);
  } catch (const parse_error& e) {
    throw fail(e.what());
  }
  return t;
}

}  // namespace

Dataset ingest_stream(std::istream& in, const FilterConfig& filters,
                      const std::string& origin) {
  std::vector<RawTriple> raw;
  std::string line;
  std::size_t line_no = 0;
  IngestStats stats;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.lines;
    raw.push_back(parse_line(line, origin, line_no));
  }

  // Column source consistency and pattern-length filter.
  std::unordered_map<std::string, Source> column_source;
  std::unordered_set<std::string> dropped_columns;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawTriple& t = raw[i];
    auto it = column_source.find(t.column);
    if (it == column_source.end()) {
      column_source.emplace(t.column, t.source);
      if (t.source == Source::kText) {
        const auto toks = tokenize(t.column);
        if (toks.empty()) {
          throw parse_error(origin + ": text column '" + t.column + "' has no tokens");
        }
        if (filters.max_pattern_len > 0 && toks.size() > filters.max_pattern_len) {
          dropped_columns.insert(t.column);
          ++stats.dropped_long_patterns;
        }
      }
    } else if (it->second != t.source) {
      throw parse_error(origin + ": column '" + t.column +
                        "' appears with both kb and text sources");
    }
  }

  // Row degree filter counts KB facts only, over distinct (row, column).
  std::unordered_map<std::string, std::set<std::string>> kb_facts;
  for (const RawTriple& t : raw) {
    if (t.source == Source::kKb && !dropped_columns.count(t.column)) {
      kb_facts[t.row].insert(t.column);
    }
  }
  std::unordered_set<std::string> dropped_rows;
  if (filters.min_row_degree > 0) {
    std::unordered_set<std::string> all_rows;
    for (const RawTriple& t : raw) all_rows.insert(t.row);
    for (const std::string& r : all_rows) {
      auto it = kb_facts.find(r);
      const std::size_t degree = it == kb_facts.end() ? 0 : it->second.size();
      if (degree < filters.min_row_degree) dropped_rows.insert(r);
    }
    stats.dropped_low_degree_rows = dropped_rows.size();
  }

  Dataset out;
  out.stats = stats;
  std::unordered_set<std::uint64_t> seen;
  for (const RawTriple& t : raw) {
    if (dropped_columns.count(t.column) || dropped_rows.count(t.row)) continue;
    const RowId r = out.vocab.add_row(t.row);
    const ColId c = out.vocab.add_column(t.column, t.source);
    const std::uint64_t key = (std::uint64_t(r) << 32) | c;
    if (!seen.insert(key).second) {
      ++out.stats.duplicates;
      continue;
    }
    out.triples.push_back(Triple{r, c, t.source});
  }
  if (out.triples.empty()) {
    throw empty_dataset_error(origin + ": no triples survive ingestion");
  }
  return out;
}

Dataset ingest_triples(const std::string& path, const FilterConfig& filters) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open triple file " + path);
  return ingest_stream(in, filters, path);
}

bool DatasetSplit::observes(RowId row, ColId col) const {
  const auto& cols = observed_columns[row];
  return std::binary_search(cols.begin(), cols.end(), col);
}

DatasetSplit make_split_from_parts(std::vector<Triple> train,
                                   std::vector<Triple> valid,
                                   std::vector<Triple> test,
                                   std::vector<Triple> evidence,
                                   const Vocabulary& vocab) {
  DatasetSplit s;
  s.train = std::move(train);
  s.valid = std::move(valid);
  s.test = std::move(test);
  s.evidence = std::move(evidence);
  const std::size_t n = vocab.num_rows();
  s.observed_columns.assign(n, {});
  s.row_in_train.assign(n, 0);
  s.row_unseen.assign(n, 0);
  s.row_has_text.assign(n, 0);
  for (const Triple& t : s.train) {
    s.observed_columns[t.row].push_back(t.column);
    s.row_in_train[t.row] = 1;
    if (t.source == Source::kText) s.row_has_text[t.row] = 1;
  }
  for (const Triple& t : s.evidence) {
    s.observed_columns[t.row].push_back(t.column);
    s.row_unseen[t.row] = 1;
    if (t.source == Source::kText) s.row_has_text[t.row] = 1;
  }
  for (const Triple& t : s.test) {
    if (!s.row_in_train[t.row]) s.row_unseen[t.row] = 1;
  }
  for (auto& cols : s.observed_columns) {
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  }
  return s;
}

namespace {

void check_ratios(const SplitRatios& ratios) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
    throw config_error("split ratios must be non-negative");
  }
  const double sum = ratios.train + ratios.valid + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw config_error("split ratios must sum to 1, got " + std::to_string(sum));
  }
}

}  // namespace

DatasetSplit split_dataset(const std::vector<Triple>& triples,
                           const Vocabulary& vocab, const SplitRatios& ratios,
                           std::uint64_t seed, bool kb_only_eval) {
  check_ratios(ratios);
  std::vector<Triple> pool, pinned;
  for (const Triple& t : triples) {
    if (kb_only_eval && t.source == Source::kText) {
      pinned.push_back(t);
    } else {
      pool.push_back(t);
    }
  }
  Rng rng(seed);
  rng.shuffle(pool);
  const std::size_t n = pool.size();
  const std::size_t n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
  const std::size_t n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(ratios.valid * n)));
  std::vector<Triple> train(pool.begin(), pool.begin() + n_train);
  std::vector<Triple> valid(pool.begin() + n_train, pool.begin() + n_train + n_valid);
  std::vector<Triple> test(pool.begin() + n_train + n_valid, pool.end());
  train.insert(train.end(), pinned.begin(), pinned.end());
  return make_split_from_parts(std::move(train), std::move(valid),
                               std::move(test), {}, vocab);
}

DatasetSplit make_unseen_row_split(const std::vector<Triple>& triples,
                                   const Vocabulary& vocab,
                                   const SplitRatios& ratios, double n_unseen,
                                   std::uint64_t seed, bool kb_only_eval) {
  check_ratios(ratios);
  if (n_unseen <= 0) {
    return split_dataset(triples, vocab, ratios, seed, kb_only_eval);
  }
  const std::size_t num_rows = vocab.num_rows();
  std::size_t count = n_unseen < 1.0
                          ? static_cast<std::size_t>(std::llround(n_unseen * num_rows))
                          : static_cast<std::size_t>(std::llround(n_unseen));
  count = std::max<std::size_t>(count, 1);
  if (count >= num_rows) {
    throw config_error("unseen row count " + std::to_string(count) +
                       " must be smaller than the row count " + std::to_string(num_rows));
  }

  Rng rng(seed);
  std::vector<RowId> row_ids(num_rows);
  for (std::size_t i = 0; i < num_rows; ++i) row_ids[i] = static_cast<RowId>(i);
  rng.shuffle(row_ids);
  std::vector<std::uint8_t> unseen(num_rows, 0);
  for (std::size_t i = 0; i < count; ++i) unseen[row_ids[i]] = 1;

  std::vector<Triple> test, evidence, seen_pool, pinned;
  for (const Triple& t : triples) {
    if (unseen[t.row]) {
      if (t.source == Source::kKb) {
        test.push_back(t);
      } else {
        evidence.push_back(t);
      }
    } else if (kb_only_eval && t.source == Source::kText) {
      pinned.push_back(t);
    } else {
      seen_pool.push_back(t);
    }
  }
  if (test.empty()) {
    throw config_error("unseen-row split selected rows with no KB facts; no test positives");
  }

  // Seen rows are divided between train and validation in the train:valid
  // proportion; the test share is covered by the unseen rows.
  rng.shuffle(seen_pool);
  const double denom = ratios.train + ratios.valid;
  const double train_share = denom > 0 ? ratios.train / denom : 1.0;
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(train_share * seen_pool.size()));
  std::vector<Triple> train(seen_pool.begin(), seen_pool.begin() + n_train);
  std::vector<Triple> valid(seen_pool.begin() + n_train, seen_pool.end());
  train.insert(train.end(), pinned.begin(), pinned.end());
  return make_split_from_parts(std::move(train), std::move(valid),
                               std::move(test), std::move(evidence), vocab);
}

namespace {
const char* part_name(int part) {
  switch (part) {
    case 0: return "train";
    case 1: return "valid";
    case 2: return "test";
    default: return "evidence";
  }
}
}  // namespace

void save_split(const DatasetSplit& split, const Vocabulary& vocab,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  const std::vector<Triple>* parts[4] = {&split.train, &split.valid,
                                         &split.test, &split.evidence};
  for (int p = 0; p < 4; ++p) {
    for (const Triple& t : *parts[p]) {
      out << vocab.row_name(t.row) << '\t' << vocab.column_name(t.column) << '\t'
          << source_name(t.source) << '\t' << part_name(p) << '\n';
    }
  }
}

DatasetSplit load_split(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read split file " + path);
  std::vector<Triple> parts[4];
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const auto fail = [&](const std::string& what) -> parse_error {
      return parse_error(path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 4) throw fail("expected row<TAB>column<TAB>source<TAB>part");
    const auto row = vocab.find_row(fields[0]);
    const auto col = vocab.find_column(fields[1]);
    if (!row || !col) throw fail("unknown row or column '" + fields[0] + "'/'" + fields[1] + "'");
    const Source src = source_from_name(fields[2]);
    int part = -1;
    for (int p = 0; p < 4; ++p) {
      if (fields[3] == part_name(p)) part = p;
    }
    if (part < 0) throw fail("unknown split part '" + fields[3] + "'");
    parts[part].push_back(Triple{*row, *col, src});
  }
  return make_split_from_parts(std::move(parts[0]), std::move(parts[1]),
                               std::move(parts[2]), std::move(parts[3]), vocab);
}

SynthData generate_synthetic(const SynthSpec& spec) {
  if (spec.n_rows == 0 || spec.n_cols == 0 || spec.n_blocks == 0) {
    throw config_error("synthetic spec requires positive rows, cols and blocks");
  }
  if (spec.n_blocks > std::min(spec.n_rows, spec.n_cols)) {
    throw config_error("synthetic spec requires n_blocks <= min(n_rows, n_cols)");
  }
  if (spec.noise_rate < 0 || spec.noise_rate > 1) {
    throw config_error("noise_rate must lie in [0, 1]");
  }

  SynthData data;
  data.row_block.resize(spec.n_rows);
  data.col_block.resize(spec.n_cols);
  int width = 1;
  for (std::size_t v = std::max(spec.n_rows, spec.n_cols); v >= 10; v /= 10) ++width;

  const auto pad = [width](std::size_t v) {
    std::string s = std::to_string(v);
    while (s.size() < static_cast<std::size_t>(width)) s.insert(s.begin(), '0');
    return s;
  };

  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    data.row_block[i] = i * spec.n_blocks / spec.n_rows;
    data.vocab.add_row("r" + pad(i));
  }
  for (std::size_t j = 0; j < spec.n_cols; ++j) {
    data.col_block[j] = j * spec.n_blocks / spec.n_cols;
    if (j % 2 == 0) {
      data.vocab.add_column("kb_type_" + pad(j), Source::kKb);
    } else {
      data.vocab.add_column(
          "pattern b" + std::to_string(data.col_block[j]) + " p" + pad(j),
          Source::kText);
    }
  }

  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    for (std::size_t j = 0; j < spec.n_cols; ++j) {
      const bool same = data.row_block[i] == data.col_block[j];
      const double p = same ? 1.0 - spec.noise_rate : spec.noise_rate;
      if (rng.next_real() < p) {
        data.triples.push_back(Triple{static_cast<RowId>(i), static_cast<ColId>(j),
                                      data.vocab.column_source(static_cast<ColId>(j))});
      }
    }
  }
  return data;
}

void write_triples_tsv(const Vocabulary& vocab,
                       const std::vector<Triple>& triples,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (const Triple& t : triples) {
    out << vocab.row_name(t.row) << '\t' << vocab.column_name(t.column) << '\t'
        << source_name(t.source) << '\n';
  }
}

void write_synth_blocks(const SynthData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (std::size_t i = 0; i < data.row_block.size(); ++i) {
    out << "row\t" << data.vocab.row_name(static_cast<RowId>(i)) << '\t'
        << data.row_block[i] << '\n';
  }
  for (std::size_t j = 0; j < data.col_block.size(); ++j) {
    out << "col\t" << data.vocab.column_name(static_cast<ColId>(j)) << '\t'
        << data.col_block[j] << '\n';
  }
}

void write_synth_truth(const SynthData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (std::size_t i = 0; i < data.row_block.size(); ++i) {
    for (std::size_t j = 0; j < data.col_block.size(); ++j) {
      if (data.row_block[i] == data.col_block[j]) {
        out << data.vocab.row_name(static_cast<RowId>(i)) << '\t'
            << data.vocab.column_name(static_cast<ColId>(j)) << '\n';
      }
    }
  }
}

}  // namespace rowless

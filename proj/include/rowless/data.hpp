#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rowless/vocab.hpp"

namespace rowless {

// One observed (row, column) fact. Duplicates are collapsed at ingest.
struct Triple {
  RowId row;
  ColId column;
  Source source;

  bool operator==(const Triple& o) const {
    return row == o.row && column == o.column && source == o.source;
  }
};

struct FilterConfig {
  // TEXT columns whose pattern tokenizes to more than this many tokens are
  // dropped entirely. 0 disables the filter.
  std::size_t max_pattern_len = 35;
  // Rows with fewer than this many KB facts are dropped entirely.
  // 0 disables the filter.
  std::size_t min_row_degree = 5;
};

struct IngestStats {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
  std::size_t dropped_long_patterns = 0;   // distinct columns dropped
  std::size_t dropped_low_degree_rows = 0; // distinct rows dropped
};

struct Dataset {
  Vocabulary vocab;
  std::vector<Triple> triples;
  IngestStats stats;
};

// Reads a tab-separated triple file (row<TAB>column<TAB>source, source in
// {kb, text}), applies the configured filters, deduplicates, and builds dense
// vocabularies over the surviving strings.
Dataset ingest_triples(const std::string& path, const FilterConfig& filters);
Dataset ingest_stream(std::istream& in, const FilterConfig& filters,
                      const std::string& origin);

struct SplitRatios {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<Triple> train, valid, test;
  // TEXT triples of unseen rows, kept out of every split but available as
  // aggregation evidence.
  std::vector<Triple> evidence;
  // Per row id: train-observed column ids (plus retained evidence), ascending.
  std::vector<std::vector<ColId>> observed_columns;
  std::vector<std::uint8_t> row_in_train;   // any train triple mentions the row
  std::vector<std::uint8_t> row_unseen;     // selected by the unseen-row split
  std::vector<std::uint8_t> row_has_text;   // any TEXT evidence/train mention

  bool observes(RowId row, ColId col) const;
};

// Rebuilds the derived members from the four triple lists.
DatasetSplit make_split_from_parts(std::vector<Triple> train,
                                   std::vector<Triple> valid,
                                   std::vector<Triple> test,
                                   std::vector<Triple> evidence,
                                   const Vocabulary& vocab);

// Seeded random partition by triple. With kb_only_eval set, only KB triples
// are partitioned and every TEXT triple stays in train.
DatasetSplit split_dataset(const std::vector<Triple>& triples,
                           const Vocabulary& vocab, const SplitRatios& ratios,
                           std::uint64_t seed, bool kb_only_eval = false);

// Cold-start protocol: n_unseen rows (a count, or a fraction when < 1) are
// removed from training entirely. Their KB triples become the test positives
// and their TEXT triples are retained as aggregation evidence. The remaining
// rows' triples are divided between train and validation. n_unseen = 0 falls
// back to split_dataset.
DatasetSplit make_unseen_row_split(const std::vector<Triple>& triples,
                                   const Vocabulary& vocab,
                                   const SplitRatios& ratios, double n_unseen,
                                   std::uint64_t seed,
                                   bool kb_only_eval = false);

void save_split(const DatasetSplit& split, const Vocabulary& vocab,
                const std::string& path);
DatasetSplit load_split(const std::string& path, const Vocabulary& vocab);

struct SynthSpec {
  std::size_t n_rows = 50;
  std::size_t n_cols = 20;
  std::size_t n_blocks = 2;
  double noise_rate = 0.05;
  std::uint64_t seed = 1;
};

struct SynthData {
  Vocabulary vocab;
  std::vector<Triple> triples;
  std::vector<std::size_t> row_block;  // per row id
  std::vector<std::size_t> col_block;  // per column id
};

// Planted block model: rows and columns are partitioned into contiguous
// blocks; (r, c) is emitted with probability 1-noise_rate when the blocks
// match and noise_rate otherwise. Every second column is a TEXT pattern so
// cold-start rows keep textual evidence. Deterministic under the seed.
SynthData generate_synthetic(const SynthSpec& spec);

void write_triples_tsv(const Vocabulary& vocab,
                       const std::vector<Triple>& triples,
                       const std::string& path);
void write_synth_blocks(const SynthData& data, const std::string& path);
// All block-compatible (row, column) pairs, one per line: the complete
// ground truth behind the sampled observations.
void write_synth_truth(const SynthData& data, const std::string& path);

}  // namespace rowless

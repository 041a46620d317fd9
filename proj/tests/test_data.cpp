#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rowless/data.hpp"
#include "rowless/errors.hpp"
#include "test_support.hpp"

using namespace rowless;

namespace {

Dataset ingest_text(const std::string& text, FilterConfig filters = {0, 0}) {
  std::istringstream in(text);
  return ingest_stream(in, filters, "<test>");
}

std::string long_pattern(std::size_t tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(i);
  }
  return s;
}

}  // namespace

TEST_CASE("ingest parses rows, columns and sources") {
  const auto data = ingest_text(
      "e1\ttypeA\tkb\n"
      "e1\tlives in\ttext\n"
      "e2\ttypeA\tkb\n");
  CHECK(data.vocab.num_rows() == 2);
  CHECK(data.vocab.num_columns() == 2);
  CHECK(data.triples.size() == 3);
  const ColId text_col = *data.vocab.find_column("lives in");
  CHECK(data.vocab.column_source(text_col) == Source::kText);
  CHECK(data.vocab.column_tokens(text_col).size() == 2);
  const ColId kb_col = *data.vocab.find_column("typeA");
  CHECK(data.vocab.column_tokens(kb_col).empty());
}

TEST_CASE("ingest drops text patterns longer than the cap") {
  std::string text = "e1\t" + long_pattern(36) + "\ttext\n";
  text += "e1\t" + long_pattern(35) + "\ttext\n";
  text += "e1\ttypeA\tkb\n";
  const auto data = ingest_text(text, FilterConfig{35, 0});
  CHECK(data.stats.dropped_long_patterns == 1);
  CHECK(data.vocab.num_columns() == 2);
  CHECK_FALSE(data.vocab.find_column(long_pattern(36)).has_value());
  CHECK(data.vocab.find_column(long_pattern(35)).has_value());
}

TEST_CASE("ingest drops rows below the KB degree floor") {
  std::string text;
  for (int i = 0; i < 5; ++i) {
    text += "rich\ttype" + std::to_string(i) + "\tkb\n";
  }
  for (int i = 0; i < 4; ++i) {
    text += "poor\ttype" + std::to_string(i) + "\tkb\n";
  }
  text += "poor\tsome pattern\ttext\n";  // text facts do not count
  const auto data = ingest_text(text, FilterConfig{0, 5});
  CHECK(data.stats.dropped_low_degree_rows == 1);
  CHECK(data.vocab.find_row("rich").has_value());
  CHECK_FALSE(data.vocab.find_row("poor").has_value());
}

TEST_CASE("duplicate lines collapse to one triple") {
  const auto data = ingest_text(
      "e1\ttypeA\tkb\n"
      "e1\ttypeA\tkb\n");
  CHECK(data.triples.size() == 1);
  CHECK(data.stats.duplicates == 1);
}

TEST_CASE("malformed lines report their line number") {
  CHECK_THROWS_WITH_AS(ingest_text("e1\ttypeA\tkb\nbroken line\n"),
                       doctest::Contains("<test>:2"), parse_error);
  CHECK_THROWS_AS(ingest_text("e1\ttypeA\tnothing\n"), parse_error);
  CHECK_THROWS_AS(ingest_text("e1\ttypeA\tkb\textra\n"), parse_error);
}

TEST_CASE("columns cannot switch source") {
  CHECK_THROWS_AS(ingest_text("e1\tfoo\tkb\ne2\tfoo\ttext\n"), parse_error);
}

TEST_CASE("fully filtered input is an empty-dataset error") {
  CHECK_THROWS_AS(ingest_text("e1\ttypeA\tkb\n", FilterConfig{0, 5}),
                  empty_dataset_error);
}

TEST_CASE("split respects exact ratio sizes") {
  std::string text;
  for (int i = 0; i < 100; ++i) {
    text += "e" + std::to_string(i / 10) + "\ttype" + std::to_string(i % 10) + "\tkb\n";
  }
  const auto data = ingest_text(text);
  const auto split = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 17);
  CHECK(split.train.size() == 60);
  CHECK(split.valid.size() == 20);
  CHECK(split.test.size() == 20);

  SUBCASE("same seed, same partition") {
    const auto again = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 17);
    CHECK(again.train == split.train);
    CHECK(again.test == split.test);
  }
  SUBCASE("degenerate ratios put everything in train") {
    const auto all = split_dataset(data.triples, data.vocab, {1.0, 0.0, 0.0}, 17);
    CHECK(all.train.size() == 100);
    CHECK(all.test.empty());
  }
  SUBCASE("parts are disjoint and no test positive leaks into train") {
    std::set<std::pair<RowId, ColId>> train_pairs;
    for (const Triple& t : split.train) train_pairs.insert({t.row, t.column});
    for (const Triple& t : split.valid) CHECK_FALSE(train_pairs.count({t.row, t.column}));
    for (const Triple& t : split.test) CHECK_FALSE(train_pairs.count({t.row, t.column}));
  }
  SUBCASE("ratio sum is validated") {
    CHECK_THROWS_AS(split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.3}, 17),
                    config_error);
  }
}

TEST_CASE("observed columns come from train only, ascending") {
  Vocabulary v = fixtures::small_vocab(2, 4, 0);
  std::vector<Triple> triples{
      {0, 3, Source::kKb}, {0, 1, Source::kKb}, {1, 2, Source::kKb}};
  auto split = make_split_from_parts(triples, {}, {{0, 2, Source::kKb}}, {}, v);
  CHECK(split.observed_columns[0] == std::vector<ColId>{1, 3});
  CHECK(split.observed_columns[1] == std::vector<ColId>{2});
  CHECK(split.observes(0, 3));
  CHECK_FALSE(split.observes(0, 2));  // test triple is not evidence
}

TEST_CASE("kb-only split pins every text triple to train") {
  std::string text;
  for (int i = 0; i < 20; ++i) {
    text += "e" + std::to_string(i) + "\ttypeA\tkb\n";
    text += "e" + std::to_string(i) + "\tworks with\ttext\n";
  }
  const auto data = ingest_text(text);
  const auto split = split_dataset(data.triples, data.vocab, {0.5, 0.25, 0.25}, 3, true);
  for (const Triple& t : split.valid) CHECK(t.source == Source::kKb);
  for (const Triple& t : split.test) CHECK(t.source == Source::kKb);
  std::size_t text_in_train = 0;
  for (const Triple& t : split.train) text_in_train += t.source == Source::kText;
  CHECK(text_in_train == 20);
}

TEST_CASE("unseen-row split removes the rows from training but keeps text evidence") {
  std::string text;
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 3; ++c) {
      text += "e" + std::to_string(r) + "\ttype" + std::to_string(c) + "\tkb\n";
    }
    text += "e" + std::to_string(r) + "\tmentioned near type0\ttext\n";
    text += "e" + std::to_string(r) + "\tmentioned near type1\ttext\n";
    text += "e" + std::to_string(r) + "\tmentioned near type2\ttext\n";
  }
  const auto data = ingest_text(text);
  const auto split =
      make_unseen_row_split(data.triples, data.vocab, {0.6, 0.2, 0.2}, 2.0, 5);

  std::size_t unseen = 0;
  for (RowId r = 0; r < data.vocab.num_rows(); ++r) unseen += split.row_unseen[r];
  CHECK(unseen == 2);

  for (const Triple& t : split.train) CHECK_FALSE(split.row_unseen[t.row]);
  for (const Triple& t : split.valid) CHECK_FALSE(split.row_unseen[t.row]);
  for (const Triple& t : split.test) {
    CHECK(split.row_unseen[t.row]);
    CHECK(t.source == Source::kKb);
  }
  // Each unseen row keeps its three text mentions as evidence.
  for (RowId r = 0; r < data.vocab.num_rows(); ++r) {
    if (!split.row_unseen[r]) continue;
    CHECK(split.observed_columns[r].size() == 3);
    for (ColId c : split.observed_columns[r]) {
      CHECK(data.vocab.column_source(c) == Source::kText);
    }
    CHECK_FALSE(split.row_in_train[r]);
  }

  SUBCASE("count zero falls back to the plain split") {
    const auto plain = make_unseen_row_split(data.triples, data.vocab, {0.6, 0.2, 0.2}, 0.0, 5);
    const auto direct = split_dataset(data.triples, data.vocab, {0.6, 0.2, 0.2}, 5);
    CHECK(plain.train == direct.train);
    CHECK(plain.test == direct.test);
  }
  SUBCASE("fraction counts are rows, not triples") {
    const auto frac = make_unseen_row_split(data.triples, data.vocab, {0.6, 0.2, 0.2}, 0.2, 5);
    std::size_t n = 0;
    for (RowId r = 0; r < data.vocab.num_rows(); ++r) n += frac.row_unseen[r];
    CHECK(n == 2);
  }
}

TEST_CASE("unseen split with no KB facts for the held-out rows is rejected") {
  Vocabulary v;
  v.add_row("a");
  v.add_row("b");
  v.add_column("only pattern", Source::kText);
  std::vector<Triple> triples{{0, 0, Source::kText}, {1, 0, Source::kText}};
  CHECK_THROWS_AS(make_unseen_row_split(triples, v, {0.6, 0.2, 0.2}, 1.0, 1),
                  config_error);
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.n_rows = 50;
  spec.n_cols = 20;
  spec.n_blocks = 2;
  spec.noise_rate = 0.05;
  spec.seed = 11;
  const auto data = generate_synthetic(spec);

  SUBCASE("deterministic under the seed") {
    const auto again = generate_synthetic(spec);
    CHECK(again.triples == data.triples);
  }
  SUBCASE("zero noise yields a block-diagonal matrix") {
    SynthSpec clean = spec;
    clean.noise_rate = 0.0;
    const auto exact = generate_synthetic(clean);
    CHECK(exact.triples.size() == 500);
    for (const Triple& t : exact.triples) {
      CHECK(exact.row_block[t.row] == exact.col_block[t.column]);
    }
  }
  SUBCASE("in-block density is close to 1 - noise_rate") {
    std::size_t in_block = 0;
    for (const Triple& t : data.triples) {
      in_block += data.row_block[t.row] == data.col_block[t.column];
    }
    const double density = static_cast<double>(in_block) / 500.0;
    CHECK(density > 0.90);
    CHECK(density < 1.0);
  }
  SUBCASE("both sources are represented so cold-start rows keep evidence") {
    CHECK(data.vocab.num_kb_columns() == 10);
    CHECK(data.vocab.num_text_columns() == 10);
  }
}

TEST_CASE("vocabulary round-trips through its serialized form") {
  const auto data = ingest_text(
      "e1\ttypeA\tkb\n"
      "e1\tlives in the city of\ttext\n"
      "e2\tworks for\ttext\n"
      "e2\ttypeB\tkb\n");
  const std::string dir = "vocab_roundtrip_tmp";
  std::filesystem::remove_all(dir);
  data.vocab.save(dir);
  const Vocabulary loaded = Vocabulary::load(dir);
  CHECK(loaded == data.vocab);
  for (ColId c = 0; c < data.vocab.num_columns(); ++c) {
    CHECK(loaded.column_tokens(c) == data.vocab.column_tokens(c));
  }

  // Saving the loaded copy reproduces identical bytes.
  const std::string dir2 = "vocab_roundtrip_tmp2";
  std::filesystem::remove_all(dir2);
  loaded.save(dir2);
  for (const char* f : {"rows.tsv", "columns.tsv", "tokens.tsv", "column_sources.tsv"}) {
    std::ifstream a(dir + "/" + f), b(dir2 + "/" + f);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("split round-trips through its serialized form") {
  const auto data = ingest_text(
      "e0\ttypeA\tkb\ne0\ttypeB\tkb\ne0\tnear\ttext\n"
      "e1\ttypeA\tkb\ne1\ttypeB\tkb\ne1\tnear\ttext\n"
      "e2\ttypeA\tkb\ne2\ttypeB\tkb\ne2\tnear\ttext\n");
  const auto split =
      make_unseen_row_split(data.triples, data.vocab, {0.6, 0.2, 0.2}, 1.0, 9);
  const std::string path = "split_roundtrip_tmp.tsv";
  save_split(split, data.vocab, path);
  const auto loaded = load_split(path, data.vocab);
  CHECK(loaded.train == split.train);
  CHECK(loaded.valid == split.valid);
  CHECK(loaded.test == split.test);
  CHECK(loaded.evidence == split.evidence);
  CHECK(loaded.observed_columns == split.observed_columns);
  CHECK(loaded.row_unseen == split.row_unseen);
  std::filesystem::remove(path);
}

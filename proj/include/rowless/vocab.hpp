#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rowless {

using RowId = std::uint32_t;
using ColId = std::uint32_t;
using TokId = std::uint32_t;

enum class Source : std::uint8_t { kKb = 0, kText = 1 };

const char* source_name(Source s);
Source source_from_name(const std::string& name);

// Splits on runs of whitespace. TEXT column strings are tokenized with this.
std::vector<std::string> tokenize(const std::string& text);

// Bidirectional string<->dense-id maps for rows, columns and pattern tokens.
// Ids are assigned in first-appearance order. TEXT columns carry the token-id
// sequence of their pattern string; KB columns carry none.
class Vocabulary {
 public:
  RowId add_row(const std::string& name);
  ColId add_column(const std::string& name, Source source);
  TokId add_token(const std::string& name);

  std::optional<RowId> find_row(const std::string& name) const;
  std::optional<ColId> find_column(const std::string& name) const;
  std::optional<TokId> find_token(const std::string& name) const;

  std::size_t num_rows() const { return row_names_.size(); }
  std::size_t num_columns() const { return column_names_.size(); }
  std::size_t num_tokens() const { return token_names_.size(); }

  const std::string& row_name(RowId id) const { return row_names_[id]; }
  const std::string& column_name(ColId id) const { return column_names_[id]; }
  const std::string& token_name(TokId id) const { return token_names_[id]; }

  Source column_source(ColId id) const { return column_sources_[id]; }
  const std::vector<TokId>& column_tokens(ColId id) const {
    return column_tokens_[id];
  }

  std::size_t num_kb_columns() const;
  std::size_t num_text_columns() const;

  // One file per map, "id<TAB>string" with ids ascending from 0, plus the
  // per-column source tags. Loading then saving reproduces identical bytes.
  void save(const std::string& dir) const;
  static Vocabulary load(const std::string& dir);

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<std::string> row_names_, column_names_, token_names_;
  std::unordered_map<std::string, RowId> row_ids_;
  std::unordered_map<std::string, ColId> column_ids_;
  std::unordered_map<std::string, TokId> token_ids_;
  std::vector<Source> column_sources_;
  std::vector<std::vector<TokId>> column_tokens_;
};

}  // namespace rowless

#include "rowless/vocab.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rowless/errors.hpp"

namespace rowless {

const char* source_name(Source s) { return s == Source::kKb ? "kb" : "text"; }

Source source_from_name(const std::string& name) {
  if (name == "kb") return Source::kKb;
  if (name == "text") return Source::kText;
  throw parse_error("unknown source tag '" + name + "' (expected kb|text)");
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

RowId Vocabulary::add_row(const std::string& name) {
  auto it = row_ids_.find(name);
  if (it != row_ids_.end()) return it->second;
  const RowId id = static_cast<RowId>(row_names_.size());
  row_names_.push_back(name);
  row_ids_.emplace(name, id);
  return id;
}

ColId Vocabulary::add_column(const std::string& name, Source source) {
  auto it = column_ids_.find(name);
  if (it != column_ids_.end()) {
    if (column_sources_[it->second] != source) {
      throw parse_error("column '" + name + "' appears with both kb and text sources");
    }
    return it->second;
  }
  const ColId id = static_cast<ColId>(column_names_.size());
  column_names_.push_back(name);
  column_ids_.emplace(name, id);
  column_sources_.push_back(source);
  std::vector<TokId> toks;
  if (source == Source::kText) {
    for (const std::string& t : tokenize(name)) toks.push_back(add_token(t));
    if (toks.empty()) {
      throw parse_error("text column '" + name + "' has no tokens");
    }
  }
  column_tokens_.push_back(std::move(toks));
  return id;
}

TokId Vocabulary::add_token(const std::string& name) {
  auto it = token_ids_.find(name);
  if (it != token_ids_.end()) return it->second;
  const TokId id = static_cast<TokId>(token_names_.size());
  token_names_.push_back(name);
  token_ids_.emplace(name, id);
  return id;
}

std::optional<RowId> Vocabulary::find_row(const std::string& name) const {
  auto it = row_ids_.find(name);
  if (it == row_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<ColId> Vocabulary::find_column(const std::string& name) const {
  auto it = column_ids_.find(name);
  if (it == column_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TokId> Vocabulary::find_token(const std::string& name) const {
  auto it = token_ids_.find(name);
  if (it == token_ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::num_kb_columns() const {
  std::size_t n = 0;
  for (Source s : column_sources_) n += (s == Source::kKb);
  return n;
}

std::size_t Vocabulary::num_text_columns() const {
  return num_columns() - num_kb_columns();
}

namespace {

void write_id_map(const std::string& path, const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << i << '\t' << names[i] << '\n';
  }
}

std::vector<std::string> read_id_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read " + path);
  std::vector<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw parse_error(path + ":" + std::to_string(line_no) + ": expected id<TAB>string");
    }
    const std::size_t id = std::stoull(line.substr(0, tab));
    if (id != names.size()) {
      throw parse_error(path + ":" + std::to_string(line_no) + ": ids must ascend densely from 0");
    }
    names.push_back(line.substr(tab + 1));
  }
  return names;
}

}  // namespace

void Vocabulary::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  write_id_map(dir + "/rows.tsv", row_names_);
  write_id_map(dir + "/columns.tsv", column_names_);
  write_id_map(dir + "/tokens.tsv", token_names_);
  std::ofstream src(dir + "/column_sources.tsv", std::ios::binary);
  if (!src) throw io_error("cannot write " + dir + "/column_sources.tsv");
  for (std::size_t i = 0; i < column_sources_.size(); ++i) {
    src << i << '\t' << source_name(column_sources_[i]) << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& dir) {
  Vocabulary v;
  const auto rows = read_id_map(dir + "/rows.tsv");
  const auto cols = read_id_map(dir + "/columns.tsv");
  const auto toks = read_id_map(dir + "/tokens.tsv");
  const auto srcs = read_id_map(dir + "/column_sources.tsv");
  if (srcs.size() != cols.size()) {
    throw parse_error(dir + ": column_sources.tsv does not match columns.tsv");
  }
  // Tokens are registered first so TEXT columns re-derive the identical
  // token-id sequences they were saved with.
  for (const auto& t : toks) v.add_token(t);
  for (const auto& r : rows) v.add_row(r);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    v.add_column(cols[i], source_from_name(srcs[i]));
  }
  if (v.num_tokens() != toks.size()) {
    throw parse_error(dir + ": tokens.tsv does not cover all text column tokens");
  }
  return v;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return row_names_ == other.row_names_ && column_names_ == other.column_names_ &&
         token_names_ == other.token_names_ && column_sources_ == other.column_sources_;
}

}  // namespace rowless

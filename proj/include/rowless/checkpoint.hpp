#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rowless/errors.hpp"
#include "rowless/model.hpp"

namespace rowless {

inline constexpr int kCheckpointVersion = 1;

// Blob layout: two little-endian uint64 dimensions (rows, cols) followed by
// row-major float32 data.
template <typename T>
void write_table_blob(const EmbeddingTable<T>& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  const std::uint64_t dims[2] = {table.rows, table.cols};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> data(table.weight.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(table.weight[i]);
  }
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw io_error("short write to " + path);
}

template <typename T>
void read_table_blob(EmbeddingTable<T>& table, const std::string& name,
                     const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("missing table blob " + path);
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw checkpoint_error("truncated table blob " + path);
  table.resize(name, static_cast<std::size_t>(dims[0]),
               static_cast<std::size_t>(dims[1]));
  std::vector<float> data(table.weight.size());
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw checkpoint_error("truncated table blob " + path);
  for (std::size_t i = 0; i < data.size(); ++i) {
    table.weight[i] = static_cast<T>(data[i]);
  }
}

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  model.vocab.save(dir);

  nlohmann::ordered_json meta;
  meta["format_version"] = kCheckpointVersion;
  meta["dim"] = model.config.dim;
  meta["aggregator"] = aggregator_name(model.config.aggregator);
  meta["encoder"] = encoder_name(model.config.encoder);
  meta["objective"] = objective_name(model.config.objective);
  meta["untied_attention"] = model.config.untied_attention;
  meta["token_dim"] = model.config.token_dim;
  meta["lstm_hidden"] = model.config.lstm_hidden;
  meta["seed"] = model.config.seed;
  meta["num_rows"] = model.vocab.num_rows();
  meta["num_columns"] = model.vocab.num_columns();
  meta["num_tokens"] = model.vocab.num_tokens();
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const EmbeddingTable<T>* t : model.tables()) {
    if (t->empty()) continue;
    tables.push_back({{"name", t->name}, {"rows", t->rows}, {"cols", t->cols}});
    write_table_blob(*t, dir + "/" + t->name + ".bin");
  }
  meta["tables"] = tables;

  std::ofstream out(dir + "/model.json", std::ios::binary);
  if (!out) throw io_error("cannot write " + dir + "/model.json");
  out << meta.dump(2) << '\n';
}

template <typename T>
Model<T> load_checkpoint(const std::string& dir) {
  std::ifstream in(dir + "/model.json", std::ios::binary);
  if (!in) throw checkpoint_error("missing checkpoint metadata " + dir + "/model.json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw checkpoint_error("bad checkpoint metadata: " + std::string(e.what()));
  }
  if (meta.value("format_version", -1) != kCheckpointVersion) {
    throw checkpoint_error("unsupported checkpoint format version");
  }

  Model<T> model;
  model.config.dim = meta.at("dim").get<std::size_t>();
  model.config.aggregator = aggregator_from_name(meta.at("aggregator").get<std::string>());
  model.config.encoder = encoder_from_name(meta.at("encoder").get<std::string>());
  model.config.objective = objective_from_name(meta.at("objective").get<std::string>());
  model.config.untied_attention = meta.at("untied_attention").get<bool>();
  model.config.token_dim = meta.at("token_dim").get<std::size_t>();
  model.config.lstm_hidden = meta.at("lstm_hidden").get<std::size_t>();
  model.config.seed = meta.at("seed").get<std::uint64_t>();
  model.vocab = Vocabulary::load(dir);

  for (const auto& entry : meta.at("tables")) {
    const std::string name = entry.at("name").get<std::string>();
    EmbeddingTable<T>* target = nullptr;
    if (name == "columns") target = &model.columns;
    else if (name == "output_columns") target = &model.output_columns;
    else if (name == "row_embeddings") target = &model.row_embeddings;
    else if (name == "tokens") target = &model.tokens;
    else if (name == "lstm_wx") target = &model.lstm_wx;
    else if (name == "lstm_wh") target = &model.lstm_wh;
    else if (name == "lstm_bias") target = &model.lstm_bias;
    else if (name == "lstm_proj") target = &model.lstm_proj;
    if (!target) throw checkpoint_error("unknown table '" + name + "' in checkpoint");
    read_table_blob(*target, name, dir + "/" + name + ".bin");
    const std::size_t rows = entry.at("rows").get<std::size_t>();
    const std::size_t cols = entry.at("cols").get<std::size_t>();
    if (target->rows != rows || target->cols != cols) {
      throw checkpoint_error("table '" + name + "' blob does not match metadata");
    }
  }

  if (model.columns.rows != model.vocab.num_columns() ||
      model.columns.cols != model.config.dim) {
    throw checkpoint_error("column table does not match vocabulary/dimension");
  }
  return model;
}

// Copies the donor's learned column vectors into a freshly initialized model
// (per-column warm start). The donor must carry the identical column
// vocabulary at the same dimension.
template <typename T>
void warm_start_columns(Model<T>& model, const std::string& donor_dir) {
  Model<T> donor = load_checkpoint<T>(donor_dir);
  if (donor.config.dim != model.config.dim) {
    throw checkpoint_error("warm start dimension mismatch: donor dim " +
                           std::to_string(donor.config.dim) + " vs " +
                           std::to_string(model.config.dim));
  }
  if (donor.vocab.num_columns() != model.vocab.num_columns()) {
    throw checkpoint_error("warm start column vocabulary size mismatch");
  }
  for (ColId c = 0; c < model.vocab.num_columns(); ++c) {
    if (donor.vocab.column_name(c) != model.vocab.column_name(c)) {
      throw checkpoint_error("warm start column vocabulary mismatch at id " +
                             std::to_string(c));
    }
  }
  model.columns.weight = donor.columns.weight;
  if (!model.output_columns.empty() && !donor.output_columns.empty()) {
    model.output_columns.weight = donor.output_columns.weight;
  }
}

}  // namespace rowless

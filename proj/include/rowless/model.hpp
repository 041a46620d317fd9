#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rowless/encoders.hpp"
#include "rowless/errors.hpp"
#include "rowless/tables.hpp"
#include "rowless/vocab.hpp"

namespace rowless {

enum class AggregatorKind { kExplicitRow, kMeanPool, kMaxPool, kMaxRelation, kAttention };
enum class EncoderKind { kLookup, kLstm };
enum class Objective { kSampledNll, kBpr };

const char* aggregator_name(AggregatorKind k);
AggregatorKind aggregator_from_name(const std::string& name);
const char* encoder_name(EncoderKind k);
EncoderKind encoder_from_name(const std::string& name);
const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct ModelConfig {
  std::size_t dim = 25;
  AggregatorKind aggregator = AggregatorKind::kAttention;
  EncoderKind encoder = EncoderKind::kLookup;
  Objective objective = Objective::kSampledNll;
  // Attention with separate key and output column tables. The query shares
  // the key table either way.
  bool untied_attention = false;
  std::size_t token_dim = 100;
  // LSTM hidden size; 0 means equal to dim, any other value adds a linear
  // projection down to dim.
  std::size_t lstm_hidden = 0;
  std::uint64_t seed = 42;

  std::size_t lstm_hidden_size() const { return lstm_hidden == 0 ? dim : lstm_hidden; }
  void validate() const;
};

// Fixed table ids used by gradient sinks and checkpoints.
enum TableId : int {
  kTableColumns = 0,
  kTableOutputColumns = 1,
  kTableRows = 2,
  kTableTokens = 3,
  kTableLstmWx = 4,
  kTableLstmWh = 5,
  kTableLstmBias = 6,
  kTableLstmProj = 7,
  kTableCount = 8,
};

// A column encoding plus whatever the backward pass needs to push gradients
// back through it.
template <typename T>
struct Encoded {
  ColId col = 0;
  std::vector<T> vec;
  bool from_lstm = false;
  LstmCache<T> cache;
};

enum class Role { kKey, kOutput };

template <typename T>
class Model {
 public:
  ModelConfig config;
  Vocabulary vocab;

  EmbeddingTable<T> columns;         // key/query space (and outputs when tied)
  EmbeddingTable<T> output_columns;  // only with untied attention
  EmbeddingTable<T> row_embeddings;  // only with the explicit-row aggregator
  EmbeddingTable<T> tokens;          // LSTM encoder
  EmbeddingTable<T> lstm_wx, lstm_wh, lstm_bias, lstm_proj;

  std::vector<EmbeddingTable<T>*> tables() {
    return {&columns, &output_columns, &row_embeddings, &tokens,
            &lstm_wx,  &lstm_wh,        &lstm_bias,      &lstm_proj};
  }
  std::vector<const EmbeddingTable<T>*> tables() const {
    return {&columns, &output_columns, &row_embeddings, &tokens,
            &lstm_wx,  &lstm_wh,        &lstm_bias,      &lstm_proj};
  }

  bool tied() const { return !config.untied_attention; }

  bool column_uses_lstm(ColId col) const {
    return config.encoder == EncoderKind::kLstm &&
           vocab.column_source(col) == Source::kText;
  }

  Encoded<T> encode(ColId col, Role role) const {
    Encoded<T> e;
    e.col = col;
    if (column_uses_lstm(col)) {
      e.from_lstm = true;
      const auto& seq = vocab.column_tokens(col);
      if (seq.empty()) {
        throw encoding_error("text column '" + vocab.column_name(col) +
                             "' has no token sequence");
      }
      e.cache = lstm_forward(tokens, lstm_wx, lstm_wh, lstm_bias, lstm_proj,
                             std::span<const TokId>(seq));
      e.vec = e.cache.projected;
    } else {
      const EmbeddingTable<T>& table =
          (role == Role::kOutput && !tied()) ? output_columns : columns;
      const auto r = table.row(col);
      e.vec.assign(r.begin(), r.end());
    }
    return e;
  }

  std::vector<Encoded<T>> encode_batch(std::span<const ColId> cols, Role role) const {
    std::vector<Encoded<T>> out;
    out.reserve(cols.size());
    for (ColId c : cols) out.push_back(encode(c, role));
    return out;
  }

  // Routes d_vec back into the tables that produced the encoding.
  void backprop_encoding(const Encoded<T>& e, Role role, std::span<const T> d_vec,
                         GradSink<T>& sink) const {
    if (e.from_lstm) {
      lstm_backward(tokens, lstm_wx, lstm_wh, lstm_bias, lstm_proj, e.cache,
                    d_vec, sink, kTableTokens, kTableLstmWx, kTableLstmWh,
                    kTableLstmBias, kTableLstmProj);
    } else {
      const int table_id = (role == Role::kOutput && !tied())
                               ? kTableOutputColumns
                               : kTableColumns;
      sink.add(table_id, e.col, d_vec);
    }
  }
};

// Builds the tables the configuration calls for and fills them uniformly in
// [-0.1/sqrt(dim), 0.1/sqrt(dim)], so initial scores sit near zero. Warm
// starts are applied separately by the checkpoint loader.
template <typename T>
Model<T> init_model(const ModelConfig& config, Vocabulary vocab) {
  config.validate();
  Model<T> m;
  m.config = config;
  m.vocab = std::move(vocab);
  const std::size_t d = config.dim;
  const std::size_t n_cols = m.vocab.num_columns();

  m.columns.resize("columns", n_cols, d);
  if (config.untied_attention) {
    m.output_columns.resize("output_columns", n_cols, d);
  }
  if (config.aggregator == AggregatorKind::kExplicitRow) {
    m.row_embeddings.resize("row_embeddings", m.vocab.num_rows(), d);
  }
  if (config.encoder == EncoderKind::kLstm) {
    const std::size_t h = config.lstm_hidden_size();
    m.tokens.resize("tokens", m.vocab.num_tokens(), config.token_dim);
    m.lstm_wx.resize("lstm_wx", 4 * h, config.token_dim);
    m.lstm_wh.resize("lstm_wh", 4 * h, h);
    m.lstm_bias.resize("lstm_bias", 1, 4 * h);
    if (h != d) m.lstm_proj.resize("lstm_proj", d, h);
  }

  Rng rng(config.seed);
  const T scale = static_cast<T>(0.1 / std::sqrt(static_cast<double>(d)));
  for (EmbeddingTable<T>* t : m.tables()) {
    if (!t->empty()) t->init_uniform(rng, scale);
  }
  return m;
}

struct TableSummary {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::size_t parameters() const { return rows * cols; }
};

struct ModelSummary {
  std::vector<TableSummary> tables;
  std::size_t total = 0;
  std::size_t row_parameters = 0;  // per-row model parameters (cold-start cost)
};

ModelSummary summarize_config(const ModelConfig& config, std::size_t num_rows,
                              std::size_t num_cols, std::size_t num_tokens);

template <typename T>
ModelSummary model_summary(const Model<T>& m) {
  return summarize_config(m.config, m.vocab.num_rows(), m.vocab.num_columns(),
                          m.vocab.num_tokens());
}

}  // namespace rowless

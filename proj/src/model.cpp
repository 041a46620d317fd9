#include "rowless/model.hpp"

namespace rowless {

const char* aggregator_name(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::kExplicitRow: return "explicit";
    case AggregatorKind::kMeanPool: return "mean_pool";
    case AggregatorKind::kMaxPool: return "max_pool";
    case AggregatorKind::kMaxRelation: return "max_relation";
    case AggregatorKind::kAttention: return "attention";
  }
  return "?";
}

AggregatorKind aggregator_from_name(const std::string& name) {
  if (name == "explicit") return AggregatorKind::kExplicitRow;
  if (name == "mean_pool" || name == "mean") return AggregatorKind::kMeanPool;
  if (name == "max_pool") return AggregatorKind::kMaxPool;
  if (name == "max_relation") return AggregatorKind::kMaxRelation;
  if (name == "attention") return AggregatorKind::kAttention;
  throw config_error("unknown aggregator '" + name +
                     "' (expected explicit|mean_pool|max_pool|max_relation|attention)");
}

const char* encoder_name(EncoderKind k) {
  return k == EncoderKind::kLookup ? "lookup" : "lstm";
}

EncoderKind encoder_from_name(const std::string& name) {
  if (name == "lookup") return EncoderKind::kLookup;
  if (name == "lstm") return EncoderKind::kLstm;
  throw config_error("unknown encoder '" + name + "' (expected lookup|lstm)");
}

const char* objective_name(Objective o) {
  return o == Objective::kSampledNll ? "nll" : "bpr";
}

Objective objective_from_name(const std::string& name) {
  if (name == "nll") return Objective::kSampledNll;
  if (name == "bpr") return Objective::kBpr;
  throw config_error("unknown objective '" + name + "' (expected nll|bpr)");
}

void ModelConfig::validate() const {
  if (dim == 0) throw config_error("dim must be positive");
  if (untied_attention && aggregator != AggregatorKind::kAttention) {
    throw config_error("untied_attention requires the attention aggregator");
  }
  if (untied_attention && encoder == EncoderKind::kLstm) {
    throw config_error("untied_attention is not supported with the lstm encoder");
  }
  if (encoder == EncoderKind::kLstm && token_dim == 0) {
    throw config_error("token_dim must be positive with the lstm encoder");
  }
}

ModelSummary summarize_config(const ModelConfig& config, std::size_t num_rows,
                              std::size_t num_cols, std::size_t num_tokens) {
  config.validate();
  ModelSummary s;
  const std::size_t d = config.dim;
  s.tables.push_back({"columns", num_cols, d});
  if (config.untied_attention) {
    s.tables.push_back({"output_columns", num_cols, d});
  }
  if (config.aggregator == AggregatorKind::kExplicitRow) {
    s.tables.push_back({"row_embeddings", num_rows, d});
    s.row_parameters = num_rows * d;
  }
  if (config.encoder == EncoderKind::kLstm) {
    const std::size_t h = config.lstm_hidden_size();
    s.tables.push_back({"tokens", num_tokens, config.token_dim});
    s.tables.push_back({"lstm_wx", 4 * h, config.token_dim});
    s.tables.push_back({"lstm_wh", 4 * h, h});
    s.tables.push_back({"lstm_bias", 1, 4 * h});
    if (h != d) s.tables.push_back({"lstm_proj", d, h});
  }
  for (const TableSummary& t : s.tables) s.total += t.parameters();
  return s;
}

}  // namespace rowless

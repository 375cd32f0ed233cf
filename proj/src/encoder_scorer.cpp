#include <algorithm>
#include <cmath>
#include <sstream>

#include "hnce/encoder.hpp"
#include "hnce/errors.hpp"
#include "hnce/random.hpp"

namespace hnce {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Column-wise softmax with max shift.
Matrix column_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double top = a.col(c).maxCoeff();
    out.col(c) = (a.col(c).array() - top).exp();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

// One-hot of the first maximal entry in each column.
Matrix column_hardmax(const Matrix& a) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < a.rows(); ++r)
      if (a(r, c) > a(best, c)) best = r;
    out(best, c) = 1.0;
  }
  return out;
}

// Backward through a column-wise softmax: given S = softmax(Z) and dL/dS,
// returns dL/dZ.
Matrix column_softmax_backward(const Matrix& s, const Matrix& ds) {
  Matrix dz(s.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    const double inner = s.col(c).dot(ds.col(c));
    dz.col(c) = s.col(c).array() * (ds.col(c).array() - inner);
  }
  return dz;
}

std::size_t resolve_columns(std::size_t requested, Eigen::Index available, const char* what) {
  if (requested == kAllColumns) return static_cast<std::size_t>(available);
  if (requested > static_cast<std::size_t>(available)) {
    std::ostringstream msg;
    msg << what << " reduction asks for " << requested << " columns but the sequence has "
        << available;
    throw ConfigError(msg.str());
  }
  return requested;
}

}  // namespace

void UnifiedScoreConfig::validate() const {
  if (key_reduction == KeyReduction::CodeAttention && key_columns == kAllColumns)
    throw ConfigError("code attention needs an explicit number of codes");
}

std::string UnifiedScoreConfig::to_string() const {
  auto cols = [](std::size_t n) { return n == kAllColumns ? std::string("all") : std::to_string(n); };
  std::ostringstream out;
  out << "direction=" << (direction == Direction::InputToLabel ? "x->y" : "y->x")
      << " query=leftmost(" << cols(query_columns) << ")"
      << " key=" << (key_reduction == KeyReduction::Leftmost ? "leftmost(" : "code_attention(")
      << cols(key_columns) << ")"
      << " attention=" << (attention == Attention::Soft ? "soft" : "hard");
  return out.str();
}

ArchitectureSpec ArchitectureSpec::parse(const std::string& text) {
  std::string base = text;
  std::size_t codes = 0;
  if (const auto dash = text.find('-'); dash != std::string::npos) {
    base = text.substr(0, dash);
    try {
      codes = std::stoul(text.substr(dash + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad architecture: " + text);
    }
    if (codes == 0) throw ConfigError("architecture size must be positive: " + text);
  }
  ArchitectureSpec spec;
  if (base == "dual") {
    spec.kind = ArchitectureKind::Dual;
  } else if (base == "poly") {
    spec.kind = ArchitectureKind::Poly;
  } else if (base == "multi") {
    spec.kind = ArchitectureKind::Multi;
  } else if (base == "som") {
    spec.kind = ArchitectureKind::SumOfMax;
  } else {
    throw ConfigError("unknown architecture: " + text);
  }
  if (codes != 0 && (spec.kind == ArchitectureKind::Dual || spec.kind == ArchitectureKind::SumOfMax))
    throw ConfigError("architecture takes no size: " + text);
  spec.codes = codes;
  return spec;
}

std::string ArchitectureSpec::name() const {
  switch (kind) {
    case ArchitectureKind::Dual: return "dual";
    case ArchitectureKind::SumOfMax: return "som";
    case ArchitectureKind::Poly: return "poly-" + std::to_string(codes ? codes : 16);
    case ArchitectureKind::Multi: return "multi-" + std::to_string(codes ? codes : 8);
  }
  return "?";
}

UnifiedScoreConfig instantiate_named(const ArchitectureSpec& arch) {
  UnifiedScoreConfig c;
  switch (arch.kind) {
    case ArchitectureKind::Dual:
      c = {Direction::InputToLabel, 1, KeyReduction::Leftmost, 1, Attention::Hard};
      break;
    case ArchitectureKind::Poly:
      c = {Direction::LabelToInput, 1, KeyReduction::CodeAttention, arch.codes ? arch.codes : 16,
           Attention::Soft};
      break;
    case ArchitectureKind::Multi:
      c = {Direction::InputToLabel, 1, KeyReduction::Leftmost, arch.codes ? arch.codes : 8,
           Attention::Hard};
      break;
    case ArchitectureKind::SumOfMax:
      c = {Direction::InputToLabel, kAllColumns, KeyReduction::Leftmost, kAllColumns,
           Attention::Hard};
      break;
  }
  return c;
}

UnifiedScoreConfig instantiate_named(const std::string& name) {
  return instantiate_named(ArchitectureSpec::parse(name));
}

double unified_score(const Matrix& input_encoding, const Matrix& label_encoding,
                     const Matrix* codes, const UnifiedScoreConfig& config,
                     UnifiedGradient* gradient) {
  config.validate();
  if (input_encoding.rows() != label_encoding.rows())
    throw ConfigError("input and label encodings differ in hidden size");
  const bool x_queries = config.direction == Direction::InputToLabel;
  const Matrix& query_source = x_queries ? input_encoding : label_encoding;
  const Matrix& key_source = x_queries ? label_encoding : input_encoding;

  const std::size_t m = resolve_columns(config.query_columns, query_source.cols(), "query");
  const Matrix q = query_source.leftCols(static_cast<Eigen::Index>(m));

  Matrix keys;
  Matrix code_weights;  // T x m' attention of the code reduction
  if (config.key_reduction == KeyReduction::Leftmost) {
    const std::size_t mk = resolve_columns(config.key_columns, key_source.cols(), "key");
    keys = key_source.leftCols(static_cast<Eigen::Index>(mk));
  } else {
    if (codes == nullptr) throw ConfigError("code attention needs a code matrix");
    if (codes->rows() != key_source.rows() ||
        codes->cols() != static_cast<Eigen::Index>(config.key_columns))
      throw ConfigError("code matrix has the wrong shape");
    code_weights = column_softmax(key_source.transpose() * (*codes));
    keys = key_source * code_weights;
  }

  const Matrix affinity = keys.transpose() * q;  // m' x m
  const Matrix attended =
      config.attention == Attention::Soft ? column_softmax(affinity) : column_hardmax(affinity);
  const double value = affinity.cwiseProduct(attended).sum();
  if (gradient == nullptr) return value;

  Matrix d_affinity;
  if (config.attention == Attention::Soft) {
    // s_t = a^T softmax(a): ds/da = p + p * (a - p^T a)
    d_affinity.resize(affinity.rows(), affinity.cols());
    for (Eigen::Index c = 0; c < affinity.cols(); ++c) {
      const auto a = affinity.col(c).array();
      const auto p = attended.col(c).array();
      const double mean = (a * p).sum();
      d_affinity.col(c) = p + p * (a - mean);
    }
  } else {
    d_affinity = attended;
  }
  const Matrix dq = keys * d_affinity;                // H x m
  const Matrix dkeys = q * d_affinity.transpose();    // H x m'

  Matrix d_query_source = Matrix::Zero(query_source.rows(), query_source.cols());
  d_query_source.leftCols(static_cast<Eigen::Index>(m)) = dq;
  Matrix d_key_source = Matrix::Zero(key_source.rows(), key_source.cols());
  Matrix d_codes;
  if (config.key_reduction == KeyReduction::Leftmost) {
    d_key_source.leftCols(dkeys.cols()) = dkeys;
  } else {
    d_key_source += dkeys * code_weights.transpose();
    const Matrix d_weights = key_source.transpose() * dkeys;  // T x m'
    const Matrix d_logits = column_softmax_backward(code_weights, d_weights);
    d_key_source += (*codes) * d_logits.transpose();
    d_codes = key_source * d_logits;
  }
  gradient->input_encoding = x_queries ? d_query_source : d_key_source;
  gradient->label_encoding = x_queries ? d_key_source : d_query_source;
  gradient->codes = std::move(d_codes);
  return value;
}

EncoderScorer::EncoderScorer(std::shared_ptr<const std::vector<Sequence>> inputs,
                             std::shared_ptr<const std::vector<Sequence>> labels,
                             const EncoderConfig& config)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), config_(config) {
  config_.score.validate();
  if (!inputs_ || !labels_ || inputs_->empty() || labels_->empty())
    throw ConfigError("encoder scorer needs input and label sequences");
  if (config_.vocab_size == 0 || config_.hidden == 0)
    throw ConfigError("encoder scorer needs positive vocab and hidden sizes");
  auto check = [&](const std::vector<Sequence>& seqs) {
    for (const auto& s : seqs) {
      if (s.empty()) throw ConfigError("encoder scorer: empty sequence");
      for (int t : s)
        if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab_size)
          throw ConfigError("encoder scorer: token outside the vocabulary");
    }
  };
  check(*inputs_);
  check(*labels_);
  layout_.add("input_embeddings", config_.vocab_size, config_.hidden);
  layout_.add("label_embeddings", config_.vocab_size, config_.hidden);
  if (config_.score.key_reduction == KeyReduction::CodeAttention)
    layout_.add("codes", config_.hidden, config_.score.key_columns);
  params_.resize(layout_.total_size());
  Rng rng(config_.seed);
  for (double& v : params_) v = config_.init_scale * standard_normal(rng);
}

nlohmann::json EncoderScorer::describe() const {
  return {{"family", "encoder"},
          {"vocab_size", config_.vocab_size},
          {"hidden", config_.hidden},
          {"score", config_.score.to_string()},
          {"init_scale", config_.init_scale},
          {"seed", config_.seed}};
}

Matrix EncoderScorer::encode(const Sequence& tokens, std::string_view table) const {
  const auto& b = layout_.block(table);
  const RowMajorMap emb(params_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                        static_cast<Eigen::Index>(b.cols));
  const auto len = static_cast<Eigen::Index>(tokens.size());
  Matrix out(emb.cols(), len + 1);
  out.col(0).setZero();
  for (Eigen::Index t = 0; t < len; ++t) {
    out.col(t + 1) = emb.row(tokens[static_cast<std::size_t>(t)]).transpose();
    out.col(0) += out.col(t + 1);
  }
  out.col(0) /= static_cast<double>(len);
  return out;
}

Matrix EncoderScorer::encode_input(const Sequence& tokens) const {
  return encode(tokens, "input_embeddings");
}

Matrix EncoderScorer::encode_label(const Sequence& tokens) const {
  return encode(tokens, "label_embeddings");
}

std::optional<Matrix> EncoderScorer::codes() const {
  if (!layout_.contains("codes")) return std::nullopt;
  const auto& b = layout_.block("codes");
  return Matrix(RowMajorMap(params_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                            static_cast<Eigen::Index>(b.cols)));
}

void EncoderScorer::scatter(const Sequence& tokens, const Matrix& d_encoding,
                            std::string_view table, double weight, std::span<double> grad) const {
  const auto& b = layout_.block(table);
  const std::size_t h = b.cols;
  const double summary_share = 1.0 / static_cast<double>(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    double* row = grad.data() + b.offset + static_cast<std::size_t>(tokens[t]) * h;
    const auto col = static_cast<Eigen::Index>(t + 1);
    for (std::size_t j = 0; j < h; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      row[j] += weight * (d_encoding(jj, col) + summary_share * d_encoding(jj, 0));
    }
  }
}

double EncoderScorer::score_tokens(const Sequence& input_tokens, const Sequence& label_tokens) const {
  const auto o = codes();
  return unified_score(encode_input(input_tokens), encode_label(label_tokens), o ? &*o : nullptr,
                       config_.score);
}

double EncoderScorer::score(InputId x, LabelId y) const {
  return score_tokens((*inputs_)[x], (*labels_)[y]);
}

void EncoderScorer::score_all(InputId x, std::span<double> out) const {
  const Matrix e = encode_input(x);
  const auto o = codes();
  for (LabelId y = 0; y < label_count(); ++y)
    out[y] = unified_score(e, encode_label(y), o ? &*o : nullptr, config_.score);
}

std::vector<double> EncoderScorer::score_candidates(InputId x, std::span<const LabelId> labels) const {
  const Matrix e = encode_input(x);
  const auto o = codes();
  std::vector<double> out;
  out.reserve(labels.size());
  for (LabelId y : labels) out.push_back(unified_score(e, encode_label(y), o ? &*o : nullptr, config_.score));
  return out;
}

void EncoderScorer::accumulate_gradient(InputId x, std::span<const LabelId> labels,
                                        std::span<const double> weights,
                                        std::span<double> grad) const {
  const Matrix e = encode_input(x);
  const auto o = codes();
  Matrix d_input = Matrix::Zero(e.rows(), e.cols());
  Matrix d_codes;
  if (o) d_codes = Matrix::Zero(o->rows(), o->cols());
  UnifiedGradient g;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const auto& label_tokens = (*labels_)[labels[k]];
    unified_score(e, encode_label(label_tokens), o ? &*o : nullptr, config_.score, &g);
    d_input += weights[k] * g.input_encoding;
    scatter(label_tokens, g.label_encoding, "label_embeddings", weights[k], grad);
    if (o) d_codes += weights[k] * g.codes;
  }
  scatter((*inputs_)[x], d_input, "input_embeddings", 1.0, grad);
  if (o) {
    const auto& b = layout_.block("codes");
    for (std::size_t r = 0; r < b.rows; ++r)
      for (std::size_t c = 0; c < b.cols; ++c)
        grad[b.offset + r * b.cols + c] +=
            d_codes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
}

std::unique_ptr<Scorer> EncoderScorer::clone() const { return std::make_unique<EncoderScorer>(*this); }

}  // namespace hnce

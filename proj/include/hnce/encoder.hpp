#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hnce/scorer.hpp"

namespace hnce {

using Matrix = Eigen::MatrixXd;
using Sequence = std::vector<int>;

enum class Direction { InputToLabel, LabelToInput };
enum class KeyReduction { Leftmost, CodeAttention };
enum class Attention { Soft, Hard };

// Column count meaning "every column of the encoding".
inline constexpr std::size_t kAllColumns = 0;

// Design choices of the unified score
//   s(x, y) = sum_t  Q_t^T K Attn(K^T Q)_t
// where Q holds the m query columns and K the m' key columns.
struct UnifiedScoreConfig {
  Direction direction = Direction::InputToLabel;
  std::size_t query_columns = 1;  // m, always the leftmost columns
  KeyReduction key_reduction = KeyReduction::Leftmost;
  std::size_t key_columns = 1;  // m'
  Attention attention = Attention::Hard;

  void validate() const;
  std::string to_string() const;
  friend bool operator==(const UnifiedScoreConfig&, const UnifiedScoreConfig&) = default;
};

enum class ArchitectureKind { Dual, Poly, Multi, SumOfMax };

struct ArchitectureSpec {
  ArchitectureKind kind = ArchitectureKind::Dual;
  std::size_t codes = 0;  // m' for poly and multi; 0 picks the default (16 / 8)

  // Accepts "dual", "som", "poly", "multi", "poly-16", "multi-8".
  static ArchitectureSpec parse(const std::string& text);
  std::string name() const;
};

UnifiedScoreConfig instantiate_named(const ArchitectureSpec& arch);
UnifiedScoreConfig instantiate_named(const std::string& name);

struct UnifiedGradient {
  Matrix input_encoding;  // d s / d E(x)
  Matrix label_encoding;  // d s / d F(y)
  Matrix codes;           // d s / d O (empty unless code attention)
};

// Evaluates the unified score on explicit encodings E (H x T) and F (H x T').
// `codes` is the H x m' matrix O and is required for code attention. Hard
// attention picks the lowest index among tied maxima and is treated as
// locally constant when differentiating.
double unified_score(const Matrix& input_encoding, const Matrix& label_encoding,
                     const Matrix* codes, const UnifiedScoreConfig& config,
                     UnifiedGradient* gradient = nullptr);

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 16;
  UnifiedScoreConfig score;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

// Embedding-lookup encoders over fixed token sequences. Column 0 of an
// encoding is the mean of the token embeddings (the summary column) and
// column t >= 1 is the embedding of token t. Inputs and labels use separate
// tables; the optional code matrix O exists only for code attention.
class EncoderScorer final : public Scorer {
 public:
  EncoderScorer(std::shared_ptr<const std::vector<Sequence>> inputs,
                std::shared_ptr<const std::vector<Sequence>> labels, const EncoderConfig& config);

  std::string_view family() const override { return "encoder"; }
  std::size_t input_count() const override { return inputs_->size(); }
  std::size_t label_count() const override { return labels_->size(); }
  nlohmann::json describe() const override;

  double score(InputId x, LabelId y) const override;
  using Scorer::score_all;
  void score_all(InputId x, std::span<double> out) const override;
  std::vector<double> score_candidates(InputId x, std::span<const LabelId> labels) const override;
  void accumulate_gradient(InputId x, std::span<const LabelId> labels,
                           std::span<const double> weights,
                           std::span<double> grad) const override;
  std::unique_ptr<Scorer> clone() const override;

  const EncoderConfig& config() const { return config_; }
  Matrix encode_input(const Sequence& tokens) const;
  Matrix encode_label(const Sequence& tokens) const;
  Matrix encode_input(InputId x) const { return encode_input((*inputs_)[x]); }
  Matrix encode_label(LabelId y) const { return encode_label((*labels_)[y]); }
  std::optional<Matrix> codes() const;

  double score_tokens(const Sequence& input_tokens, const Sequence& label_tokens) const;

 private:
  Matrix encode(const Sequence& tokens, std::string_view table) const;
  void scatter(const Sequence& tokens, const Matrix& d_encoding, std::string_view table,
               double weight, std::span<double> grad) const;

  std::shared_ptr<const std::vector<Sequence>> inputs_;
  std::shared_ptr<const std::vector<Sequence>> labels_;
  EncoderConfig config_;
};

}  // namespace hnce

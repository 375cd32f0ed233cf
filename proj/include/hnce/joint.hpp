#pragma once

#include <memory>
#include <vector>

#include "hnce/encoder.hpp"

namespace hnce {

struct JointConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 16;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

// Toy cross-scoring reranker over the concatenation [CLS] x [SEP] y. Every
// position attends to every other through a bilinear form, the attended rows
// are mean-pooled, and a linear head reads the score:
//   s(x, y) = w^T tanh(mean_i sum_j softmax_j(e_i^T B e_j) e_j) + b
// with e_j = token embedding + segment embedding.
class JointScorer final : public Scorer {
 public:
  JointScorer(std::shared_ptr<const std::vector<Sequence>> inputs,
              std::shared_ptr<const std::vector<Sequence>> labels, const JointConfig& config);

  std::string_view family() const override { return "joint"; }
  std::size_t input_count() const override { return inputs_->size(); }
  std::size_t label_count() const override { return labels_->size(); }
  nlohmann::json describe() const override;

  double score(InputId x, LabelId y) const override;
  void accumulate_gradient(InputId x, std::span<const LabelId> labels,
                           std::span<const double> weights,
                           std::span<double> grad) const override;
  std::unique_ptr<Scorer> clone() const override;

 private:
  double evaluate(const Sequence& x, const Sequence& y, double weight,
                  std::span<double>* grad) const;

  std::shared_ptr<const std::vector<Sequence>> inputs_;
  std::shared_ptr<const std::vector<Sequence>> labels_;
  JointConfig config_;
};

}  // namespace hnce
